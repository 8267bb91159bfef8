import math

import numpy as np
import pytest

from contiseg.lengths import (
    SkeletonGraph,
    build_skeleton_graph,
    graph_diameter,
    instance_lengths,
    write_lengths_csv,
)
from contiseg.volume import Spacing


def straight_tube(n, dims=(9, 9, 40), radius=1, start=4):
    """Radius-1 tube with an n-voxel centerline along x, strictly interior."""
    v = np.zeros(dims, dtype=np.uint8)
    z, y = dims[0] // 2, dims[1] // 2
    v[z, y, start : start + n] = 1
    v[z - 1, y, start : start + n] = v[z + 1, y, start : start + n] = 1
    v[z, y - 1, start : start + n] = v[z, y + 1, start : start + n] = 1
    return v


class TestBuildGraph:
    def test_line_along_x(self):
        skel = np.zeros((3, 3, 12), dtype=np.uint8)
        skel[1, 1, 1:11] = 1
        g = build_skeleton_graph(skel, Spacing(1, 1, 1))
        assert len(g.nodes) == 2
        assert len(g.edges) == 1
        assert g.edges[0][2] == pytest.approx(9.0)

    def test_line_along_z_respects_spacing(self):
        skel = np.zeros((12, 3, 3), dtype=np.uint8)
        skel[1:11, 1, 1] = 1
        g = build_skeleton_graph(skel, Spacing(2, 1, 1))
        assert g.edges[0][2] == pytest.approx(18.0)

    def test_y_shape(self):
        skel = np.zeros((3, 12, 12), dtype=np.uint8)
        skel[1, 5, 1:6] = 1  # stem of 5 voxels ending at the junction (1, 5, 5)
        for i in range(1, 5):  # two diagonal arms of 4 steps each
            skel[1, 5 - i, 5 + i] = 1
            skel[1, 5 + i, 5 + i] = 1
        g = build_skeleton_graph(skel, Spacing(1, 1, 1))
        assert len(g.nodes) == 4  # one junction, three endpoints
        assert len(g.edges) == 3
        weights = sorted(w for _, _, w in g.edges)
        assert weights[0] == pytest.approx(4.0)  # stem: 4 unit steps
        assert weights[1] == weights[2] == pytest.approx(4 * math.sqrt(2.0))

    def test_rejects_nonbinary(self):
        with pytest.raises(ValueError, match="binary"):
            build_skeleton_graph(np.full((2, 2, 2), 0.5), Spacing(1, 1, 1))


class TestGraphDiameter:
    def test_single_edge(self):
        g = SkeletonGraph((((0, 0, 0)), ((0, 0, 9))), ((0, 1, 9.0),))
        assert graph_diameter(g) == 9.0

    def test_y_graph_takes_two_longest_arms(self):
        nodes = tuple((0, 0, i) for i in range(4))
        edges = ((0, 1, 5.0), (0, 2, 7.0), (0, 3, 3.0))
        assert graph_diameter(SkeletonGraph(nodes, edges)) == 12.0

    def test_path_graph(self):
        nodes = tuple((0, 0, i) for i in range(3))
        edges = ((0, 1, 2.0), (1, 2, 3.0))
        assert graph_diameter(SkeletonGraph(nodes, edges)) == 5.0

    def test_trivial_graphs(self):
        assert graph_diameter(SkeletonGraph((), ())) == 0.0
        assert graph_diameter(SkeletonGraph(((1, 2, 3),), ())) == 0.0

    def test_disconnected_raises(self):
        nodes = tuple((0, 0, i) for i in range(4))
        edges = ((0, 1, 1.0), (2, 3, 1.0))
        with pytest.raises(ValueError, match="disconnected"):
            graph_diameter(SkeletonGraph(nodes, edges))


def test_pure_cycle_diameter_is_half_the_ring():
    ring = np.zeros((1, 5, 5), dtype=np.uint8)
    ring[0, 1:4, 1:4] = 1
    ring[0, 2, 2] = 0  # 8-voxel square ring
    g = build_skeleton_graph(ring, Spacing(1, 1, 1), connectivity="face")
    assert len(g.nodes) == 2  # smallest voxel plus its antipode
    assert graph_diameter(g) == pytest.approx(4.0)  # half of the 8-step ring


class TestInstanceLengths:
    def test_empty_mask(self):
        assert instance_lengths(np.zeros((4, 4, 4), dtype=np.uint8), Spacing(1, 1, 1)) == []

    def test_straight_interior_tube(self):
        n = 20
        rows = instance_lengths(straight_tube(n), Spacing(1, 1, 1))
        assert len(rows) == 1
        assert not rows[0].touches_border
        assert abs(rows[0].length_um - (n - 1)) <= 2.0  # skeleton tips may erode

    def test_spacing_scaling_is_exact(self):
        mask = straight_tube(18)
        base = instance_lengths(mask, Spacing(2, 1, 1))
        scaled = instance_lengths(mask, Spacing(4, 2, 2))
        for a, b in zip(base, scaled):
            assert b.length_um == 2.0 * a.length_um

    def test_border_touching_tube_is_flagged(self):
        v = np.zeros((5, 7, 12), dtype=np.uint8)
        v[2, 3, 0:9] = 1  # starts on the x=0 face
        rows = instance_lengths(v, Spacing(1, 1, 1))
        assert rows[0].touches_border

    def test_single_voxel_component(self):
        v = np.zeros((5, 5, 5), dtype=np.uint8)
        v[2, 2, 2] = 1
        rows = instance_lengths(v, Spacing(1, 1, 1))
        assert rows[0].length_um == 0.0

    def test_translation_invariance(self):
        v = np.zeros((9, 9, 30), dtype=np.uint8)
        v[4, 4, 4:16] = 1
        w = np.roll(v, shift=(1, 2, 5), axis=(0, 1, 2))
        a = instance_lengths(v, Spacing(1, 1, 1))
        b = instance_lengths(w, Spacing(1, 1, 1))
        assert a[0].length_um == b[0].length_um

    def test_two_components_processed_independently(self):
        v = np.zeros((9, 9, 30), dtype=np.uint8)
        v[2, 2, 3:13] = 1
        v[6, 6, 3:23] = 1
        rows = instance_lengths(v, Spacing(1, 1, 1))
        assert [r.instance_id for r in rows] == [1, 2]
        assert rows[0].length_um < rows[1].length_um

    def test_diameter_dominates_every_edge(self):
        skel = np.zeros((3, 12, 12), dtype=np.uint8)
        skel[1, 5, 1:9] = 1
        skel[1, 1:5, 6] = 1  # side branch
        g = build_skeleton_graph(skel, Spacing(1, 1, 1))
        diameter = graph_diameter(g)
        assert all(diameter >= w for _, _, w in g.edges)


def test_csv_format(tmp_path):
    rows = instance_lengths(straight_tube(10), Spacing(1, 1, 1))
    path = tmp_path / "lengths.csv"
    write_lengths_csv(rows, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("ascii").splitlines()
    assert lines[0] == "instance_id,length_um,touches_border"
    cells = lines[1].split(",")
    assert cells[0] == "1"
    assert len(cells[1].split(".")[1]) == 6  # six decimal places
    assert cells[2] in ("true", "false")
