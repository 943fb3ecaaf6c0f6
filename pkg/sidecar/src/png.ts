/**
 * PNG codec for the mock generation contract.
 *
 * Encoding is canonical and byte-identical to the workbench's writer:
 * 8-bit RGB/RGBA, no interlace, every scanline filter 0, and an IDAT
 * stream assembled by hand as zlib header 78 01 + deflate *stored*
 * blocks (max 65535 bytes) + Adler-32.
 *
 * Decoding accepts any 8-bit RGB/RGBA non-interlaced PNG (all five
 * scanline filters), inflating through node:zlib.
 */

import * as zlib from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
const MAX_STORED = 65535;

export interface Raster {
  width: number;
  height: number;
  channels: 3 | 4;
  /** Row-major, `channels` bytes per pixel. */
  pixels: Uint8Array;
}

// --- checksums -------------------------------------------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

export function adler32(data: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < data.length; i++) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

// --- encoding ---------------------------------------------------------------

function chunk(kind: string, payload: Uint8Array): Buffer {
  const body = Buffer.concat([Buffer.from(kind, "ascii"), Buffer.from(payload)]);
  const out = Buffer.alloc(8 + payload.length + 4);
  out.writeUInt32BE(payload.length, 0);
  body.copy(out, 4);
  out.writeUInt32BE(crc32(body), 8 + payload.length);
  return out;
}

function storedZlib(data: Uint8Array): Buffer {
  const parts: Buffer[] = [Buffer.from([0x78, 0x01])];
  if (data.length === 0) {
    parts.push(Buffer.from([0x01, 0x00, 0x00, 0xff, 0xff]));
  } else {
    for (let start = 0; start < data.length; start += MAX_STORED) {
      const block = data.subarray(start, start + MAX_STORED);
      const final = start + MAX_STORED >= data.length;
      const header = Buffer.alloc(5);
      header[0] = final ? 0x01 : 0x00;
      header.writeUInt16LE(block.length, 1);
      header.writeUInt16LE(block.length ^ 0xffff, 3);
      parts.push(header, Buffer.from(block));
    }
  }
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(adler32(data), 0);
  parts.push(tail);
  return Buffer.concat(parts);
}

export function encodePng(raster: Raster): Buffer {
  const { width, height, channels, pixels } = raster;
  if (pixels.length !== width * height * channels) {
    throw new Error("raster size mismatch");
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = channels === 3 ? 2 : 6; // color type
  ihdr[10] = 0;
  ihdr[11] = 0;
  ihdr[12] = 0;

  const stride = width * channels;
  const raw = Buffer.alloc((stride + 1) * height);
  for (let row = 0; row < height; row++) {
    raw[row * (stride + 1)] = 0; // filter None
    raw.set(pixels.subarray(row * stride, (row + 1) * stride), row * (stride + 1) + 1);
  }
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", storedZlib(raw)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

// --- decoding ---------------------------------------------------------------

export class PngError extends Error {}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(data: Uint8Array): Raster {
  const buf = Buffer.from(data);
  if (buf.length < 8 || !buf.subarray(0, 8).equals(SIGNATURE)) {
    throw new PngError("not a PNG (bad signature)");
  }
  let offset = 8;
  let width = 0;
  let height = 0;
  let channels: 3 | 4 = 3;
  const idat: Buffer[] = [];
  let sawIhdr = false;
  while (offset + 8 <= buf.length) {
    const length = buf.readUInt32BE(offset);
    const kind = buf.toString("ascii", offset + 4, offset + 8);
    const payload = buf.subarray(offset + 8, offset + 8 + length);
    offset += 12 + length;
    if (kind === "IHDR") {
      sawIhdr = true;
      width = payload.readUInt32BE(0);
      height = payload.readUInt32BE(4);
      const bitDepth = payload[8];
      const colorType = payload[9];
      const interlace = payload[12];
      if (bitDepth !== 8 || interlace !== 0 || (colorType !== 2 && colorType !== 6)) {
        throw new PngError(
          `unsupported PNG variant (depth ${bitDepth}, color ${colorType}, interlace ${interlace})`
        );
      }
      channels = colorType === 2 ? 3 : 4;
    } else if (kind === "IDAT") {
      idat.push(Buffer.from(payload));
    } else if (kind === "IEND") {
      break;
    }
  }
  if (!sawIhdr || idat.length === 0) {
    throw new PngError("missing IHDR or IDAT");
  }
  let raw: Buffer;
  try {
    raw = zlib.inflateSync(Buffer.concat(idat));
  } catch (err) {
    throw new PngError(`corrupt IDAT stream: ${(err as Error).message}`);
  }
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new PngError("unexpected decompressed size");
  }
  const pixels = new Uint8Array(stride * height);
  const prior = new Uint8Array(stride);
  for (let row = 0; row < height; row++) {
    const filter = raw[row * (stride + 1)];
    const line = raw.subarray(row * (stride + 1) + 1, (row + 1) * (stride + 1));
    const out = pixels.subarray(row * stride, (row + 1) * stride);
    for (let i = 0; i < stride; i++) {
      const left = i >= channels ? out[i - channels] : 0;
      const up = prior[i];
      const upLeft = i >= channels ? prior[i - channels] : 0;
      let value: number;
      switch (filter) {
        case 0:
          value = line[i];
          break;
        case 1:
          value = line[i] + left;
          break;
        case 2:
          value = line[i] + up;
          break;
        case 3:
          value = line[i] + ((left + up) >> 1);
          break;
        case 4:
          value = line[i] + paeth(left, up, upLeft);
          break;
        default:
          throw new PngError(`unknown scanline filter ${filter}`);
      }
      out[i] = value & 0xff;
    }
    prior.set(out);
  }
  return { width, height, channels, pixels };
}
