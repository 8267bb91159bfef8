/** Encoder/decoder for the CVOL volume container.
 *
 * Layout (version 1): magic "CVOL", one version byte, little-endian uint32
 * header length, UTF-8 JSON header
 * `{"dims":[z,y,x],"dtype":"u8"|"f32","spacing":[sz,sy,sx],"order":"zyx-rowmajor"}`,
 * then the raw little-endian payload with x fastest.
 *
 * Typed arrays are used directly for the payload, so a little-endian host is
 * required; the module refuses to load on big-endian machines.
 */

import { endianness } from "node:os";

import { CvolFormatError } from "./errors.js";

if (endianness() !== "LE") {
  throw new Error("contiseg-bindings requires a little-endian host (CVOL payloads are LE)");
}

const MAGIC = Buffer.from("CVOL", "ascii");
const VERSION = 1;

export type DType = "u8" | "f32";

/** Borrowed, contiguous voxel buffer with (z, y, x) shape. */
export interface ArrayView {
  readonly shape: readonly [number, number, number];
  readonly dtype: DType;
  readonly data: Uint8Array | Float32Array;
}

export interface Spacing {
  readonly sz: number;
  readonly sy: number;
  readonly sx: number;
}

export function shapeSize(shape: readonly [number, number, number]): number {
  return shape[0] * shape[1] * shape[2];
}

export function validateView(view: ArrayView, name: string): void {
  const { shape, dtype, data } = view;
  if (shape.length !== 3 || shape.some((n) => !Number.isInteger(n) || n < 1)) {
    throw new CvolFormatError(`${name}: shape must be three positive integers, got [${shape}]`);
  }
  if (dtype === "u8" && !(data instanceof Uint8Array)) {
    throw new CvolFormatError(`${name}: dtype "u8" requires a Uint8Array payload`);
  }
  if (dtype === "f32" && !(data instanceof Float32Array)) {
    throw new CvolFormatError(`${name}: dtype "f32" requires a Float32Array payload`);
  }
  if (data.length !== shapeSize(shape)) {
    throw new CvolFormatError(
      `${name}: payload holds ${data.length} elements but shape [${shape}] implies ${shapeSize(shape)}`,
    );
  }
}

function validateSpacing(spacing: Spacing): void {
  for (const value of [spacing.sz, spacing.sy, spacing.sx]) {
    if (!Number.isFinite(value) || value <= 0) {
      throw new CvolFormatError(`spacing components must be strictly positive, got ${value}`);
    }
  }
}

export function encodeCvol(view: ArrayView, spacing: Spacing): Buffer {
  validateView(view, "volume");
  validateSpacing(spacing);
  const header = Buffer.from(
    JSON.stringify({
      dims: view.shape,
      dtype: view.dtype,
      spacing: [spacing.sz, spacing.sy, spacing.sx],
      order: "zyx-rowmajor",
    }),
    "utf-8",
  );
  const lengthField = Buffer.alloc(4);
  lengthField.writeUInt32LE(header.length, 0);
  const payload = Buffer.from(view.data.buffer, view.data.byteOffset, view.data.byteLength);
  return Buffer.concat([MAGIC, Buffer.from([VERSION]), lengthField, header, payload]);
}

interface RawHeader {
  dims: unknown;
  dtype: unknown;
  spacing: unknown;
  order: unknown;
}

export function decodeCvol(buf: Buffer): { view: ArrayView; spacing: Spacing } {
  if (buf.length < 9 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new CvolFormatError("bad magic: not a CVOL container");
  }
  const version = buf[4];
  if (version !== VERSION) {
    throw new CvolFormatError(`unsupported container version ${version}`);
  }
  const headerLength = buf.readUInt32LE(5);
  if (9 + headerLength > buf.length) {
    throw new CvolFormatError("header length exceeds buffer size");
  }
  let header: RawHeader;
  try {
    header = JSON.parse(buf.subarray(9, 9 + headerLength).toString("utf-8")) as RawHeader;
  } catch (err) {
    throw new CvolFormatError(`malformed JSON header: ${String(err)}`);
  }
  const dims = header.dims;
  if (
    !Array.isArray(dims) ||
    dims.length !== 3 ||
    dims.some((n) => !Number.isInteger(n) || (n as number) < 1)
  ) {
    throw new CvolFormatError(`invalid dims ${JSON.stringify(dims)}`);
  }
  const shape = dims as [number, number, number];
  const dtype = header.dtype;
  if (dtype !== "u8" && dtype !== "f32") {
    throw new CvolFormatError(`unknown dtype ${JSON.stringify(dtype)}`);
  }
  if (header.order !== "zyx-rowmajor") {
    throw new CvolFormatError(`unsupported element order ${JSON.stringify(header.order)}`);
  }
  const rawSpacing = header.spacing;
  if (
    !Array.isArray(rawSpacing) ||
    rawSpacing.length !== 3 ||
    rawSpacing.some((s) => typeof s !== "number" || !(s > 0))
  ) {
    throw new CvolFormatError(`invalid spacing ${JSON.stringify(rawSpacing)}`);
  }

  const itemSize = dtype === "u8" ? 1 : 4;
  const expected = shapeSize(shape) * itemSize;
  const actual = buf.length - 9 - headerLength;
  if (actual !== expected) {
    throw new CvolFormatError(
      `payload length mismatch: header implies ${expected} bytes, found ${actual}`,
    );
  }
  // Copy the payload out of the file buffer so the typed array owns aligned
  // memory and does not retain the whole file.
  const payload = buf.subarray(9 + headerLength);
  const owned = payload.buffer.slice(payload.byteOffset, payload.byteOffset + payload.byteLength);
  const data = dtype === "u8" ? new Uint8Array(owned) : new Float32Array(owned);
  const [sz, sy, sx] = rawSpacing as [number, number, number];
  return { view: { shape, dtype, data }, spacing: { sz, sy, sx } };
}
