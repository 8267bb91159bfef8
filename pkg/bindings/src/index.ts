/** Array-in/array-out bindings over the contiseg command-line interface.
 *
 * Each callable takes borrowed typed-array views, ships them to the CLI as
 * CVOL containers in a private scratch directory, and returns freshly
 * allocated outputs, so results are bitwise identical to what the CLI
 * produces on the same buffers. Gradients are returned rather than applied:
 * the host training loop owns its autodiff graph and can register these
 * outputs as custom-gradient operations.
 *
 * Errors (bad shapes, invalid modes, CLI validation failures) are thrown as
 * recoverable exceptions; no failure path aborts the host process.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import {
  ArrayView,
  Spacing,
  decodeCvol,
  encodeCvol,
  validateView,
} from "./cvol.js";
import { BindingError } from "./errors.js";
import { runCli, withTempDir } from "./runner.js";

export type { ArrayView, DType, Spacing } from "./cvol.js";
export { decodeCvol, encodeCvol } from "./cvol.js";
export { BindingError, CvolFormatError } from "./errors.js";

export type RegionMode = "as-written" | "label-overlap";

const REGION_MODES: readonly RegionMode[] = ["as-written", "label-overlap"];
const UNIT_SPACING: Spacing = { sz: 1, sy: 1, sx: 1 };

function requirePair(pred: ArrayView, label: ArrayView): void {
  validateView(pred, "pred");
  validateView(label, "label");
  if (
    pred.shape[0] !== label.shape[0] ||
    pred.shape[1] !== label.shape[1] ||
    pred.shape[2] !== label.shape[2]
  ) {
    throw new BindingError(
      `pred and label must share a shape: [${pred.shape}] vs [${label.shape}]`,
    );
  }
}

function requireMode(mode: string): RegionMode {
  if (!REGION_MODES.includes(mode as RegionMode)) {
    throw new BindingError(`unknown find-regions mode "${mode}"; expected ${REGION_MODES.join(" | ")}`);
  }
  return mode as RegionMode;
}

function writeVolume(dir: string, name: string, view: ArrayView, spacing: Spacing): string {
  const path = join(dir, name);
  writeFileSync(path, encodeCvol(view, spacing));
  return path;
}

interface LossInvocation {
  evalKind: "negative_centerline" | "simplified_topology";
  mode?: RegionMode;
  wantMask: boolean;
}

function runSingleTermLoss(
  pred: ArrayView,
  label: ArrayView,
  invocation: LossInvocation,
): { value: number; gradient: ArrayView; mask?: ArrayView } {
  requirePair(pred, label);
  return withTempDir((dir) => {
    const predPath = writeVolume(dir, "pred.cvol", pred, UNIT_SPACING);
    const labelPath = writeVolume(dir, "label.cvol", label, UNIT_SPACING);
    const gradPath = join(dir, "grad.cvol");
    const args = [
      "loss",
      "--pred", predPath,
      "--label", labelPath,
      "--w-bce", "0",
      "--w-dice", "0",
      "--w-eval", "1",
      "--eval-kind", invocation.evalKind,
      "--grad-out", gradPath,
    ];
    if (invocation.mode !== undefined) {
      args.push("--mode", invocation.mode);
    }
    const maskPath = join(dir, "mask.cvol");
    if (invocation.wantMask) {
      args.push("--mask-out", maskPath);
    }
    const report = JSON.parse(runCli(args)) as { eval: number };
    const gradient = decodeCvol(readFileSync(gradPath)).view;
    if (!invocation.wantMask) {
      return { value: report.eval, gradient };
    }
    const mask = decodeCvol(readFileSync(maskPath)).view;
    return { value: report.eval, gradient, mask };
  });
}

/** Fraction of the label's skeleton the prediction misses, with its exact
 * gradient (constant in the prediction). */
export function ffiNegativeCenterline(
  pred: ArrayView,
  label: ArrayView,
): { value: number; gradient: ArrayView } {
  const { value, gradient } = runSingleTermLoss(pred, label, {
    evalKind: "negative_centerline",
    wantMask: false,
  });
  return { value, gradient };
}

/** Cross-entropy re-applied on the critical-region mask; the mask is a
 * constant, so the gradient is exactly zero outside it. */
export function ffiSimplifiedTopology(
  pred: ArrayView,
  label: ArrayView,
  mode: RegionMode = "label-overlap",
): { value: number; gradient: ArrayView; mask: ArrayView } {
  const result = runSingleTermLoss(pred, label, {
    evalKind: "simplified_topology",
    mode: requireMode(mode),
    wantMask: true,
  });
  return { value: result.value, gradient: result.gradient, mask: result.mask as ArrayView };
}

/** Full metric report for a prediction/label pair, returned as the exact
 * JSON line the CLI prints (stable keys, deterministic bytes). */
export function ffiEvaluatePair(
  pred: ArrayView,
  label: ArrayView,
  spacing: Spacing,
  threshold = 0.5,
): string {
  requirePair(pred, label);
  return withTempDir((dir) => {
    const predPath = writeVolume(dir, "pred.cvol", pred, spacing);
    const labelPath = writeVolume(dir, "label.cvol", label, spacing);
    const stdout = runCli([
      "eval",
      "--pred", predPath,
      "--label", labelPath,
      "--threshold", String(threshold),
    ]);
    return stdout.endsWith("\n") ? stdout.slice(0, -1) : stdout;
  });
}

/** Soft skeleton of a volume with values in [0, 1]. */
export function softSkeleton(volume: ArrayView): ArrayView {
  validateView(volume, "volume");
  return withTempDir((dir) => {
    const inPath = writeVolume(dir, "in.cvol", volume, UNIT_SPACING);
    const outPath = join(dir, "skel.cvol");
    runCli(["skeleton", inPath, "--out", outPath]);
    return decodeCvol(readFileSync(outPath)).view;
  });
}

/** Binary mask of the regions critical for instance continuity. */
export function findRegions(
  pred: ArrayView,
  label: ArrayView,
  mode: RegionMode = "label-overlap",
): ArrayView {
  requirePair(pred, label);
  const checked = requireMode(mode);
  return withTempDir((dir) => {
    const predPath = writeVolume(dir, "pred.cvol", pred, UNIT_SPACING);
    const labelPath = writeVolume(dir, "label.cvol", label, UNIT_SPACING);
    const outPath = join(dir, "mask.cvol");
    runCli([
      "regions",
      "--pred", predPath,
      "--label", labelPath,
      "--mode", checked,
      "--out", outPath,
    ]);
    return decodeCvol(readFileSync(outPath)).view;
  });
}
