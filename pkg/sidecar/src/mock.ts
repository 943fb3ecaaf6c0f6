/**
 * Mock generation models, byte-identical to the workbench's in-process
 * mocks (the golden files under conformance/ pin the contract):
 *
 * - the prompt hash picks a shape family and base palette, the request
 *   seed drives color jitter and geometry;
 * - objects are drawn solid on a reserved background color, so background
 *   removal is an exact color key;
 * - relighting alpha-selects the foreground over a seeded two-color
 *   gradient with a tint applied to the background only.
 *
 * Everything is integer arithmetic on splitmix64 draws.
 */

import { SplitMix64, fnv1a64, maskU64 } from "./rng";
import { Raster, decodePng, encodePng } from "./png";

export const IMG_SIDE = 64;
export const CLEAN_BG: readonly [number, number, number] = [236, 236, 236];
const RELIGHT_SALT = 0xa5c10b5e11f7d003n;

const PALETTES: ReadonlyArray<readonly [number, number, number]> = [
  [190, 60, 60],
  [60, 170, 60],
  [70, 90, 190],
  [190, 160, 50],
  [160, 70, 190],
  [60, 180, 180],
  [190, 110, 160],
  [130, 130, 60],
];

const NOUNS = [
  "lantern", "kettle", "stool", "helmet", "compass", "goblet", "satchel",
  "whistle", "ladder", "mirror", "anchor", "basket", "candle", "drum",
  "easel", "funnel", "gourd", "hammock", "inkwell", "jug", "kite",
  "locket", "mallet", "nutcracker", "oar", "pitcher", "quilt", "rattle",
  "sundial", "trowel", "urn", "violin",
] as const;

const ADJECTIVES = [
  "amber", "braided", "carved", "dusty", "enamel", "folded", "gilded",
  "hollow", "ivory", "jade", "knotted", "lacquered", "marbled", "narrow",
  "oblong", "painted", "quilted", "ribbed", "speckled", "tapered",
  "upright", "varnished", "woven", "zigzag",
] as const;

export function mockCategories(domain: string, count: number): string[] {
  if (count < 1) {
    throw new Error("count must be >= 1");
  }
  const offset = Number(fnv1a64(domain) % BigInt(NOUNS.length));
  const names: string[] = [];
  for (let i = 0; i < count; i++) {
    const noun = NOUNS[(offset + i) % NOUNS.length];
    if (i < NOUNS.length) {
      names.push(noun);
    } else {
      const j = i - NOUNS.length;
      const adjective = ADJECTIVES[Math.floor(j / NOUNS.length) % ADJECTIVES.length];
      const cycle = Math.floor(j / (NOUNS.length * ADJECTIVES.length));
      names.push(cycle > 0 ? `${adjective} ${noun} ${cycle + 1}` : `${adjective} ${noun}`);
    }
  }
  return names;
}

export function mockGenerate(prompt: string, seed: bigint, steps: number): Buffer {
  const h = fnv1a64(prompt);
  const shapeKind = Number(h % 4n);
  const base = PALETTES[Number((h >> 8n) % BigInt(PALETTES.length))];
  const mixed = h ^ maskU64(seed) ^ maskU64(BigInt(steps) * 0x9e3779b97f4a7c15n);
  const rng = new SplitMix64(mixed);
  const color = [0, 0, 0];
  for (let c = 0; c < 3; c++) {
    color[c] = base[c] - 40 + rng.randBelow(81);
  }
  const cx = 24 + rng.randBelow(17);
  const cy = 24 + rng.randBelow(17);
  const halfW = 12 + rng.randBelow(11);
  const halfH = 12 + rng.randBelow(11);

  const pixels = new Uint8Array(IMG_SIDE * IMG_SIDE * 3);
  for (let y = 0; y < IMG_SIDE; y++) {
    for (let x = 0; x < IMG_SIDE; x++) {
      const dx = x - cx;
      const dy = y - cy;
      let inside: boolean;
      if (shapeKind === 0) {
        inside = dx * dx * halfH * halfH + dy * dy * halfW * halfW <= halfW * halfW * halfH * halfH;
      } else if (shapeKind === 1) {
        inside = Math.abs(dx) <= halfW && Math.abs(dy) <= halfH;
      } else if (shapeKind === 2) {
        inside = Math.abs(dy) <= halfH && Math.abs(dx) * 2 * halfH <= halfW * (dy + halfH);
      } else {
        inside = Math.abs(dx) * halfH + Math.abs(dy) * halfW <= halfW * halfH;
      }
      const at = (y * IMG_SIDE + x) * 3;
      for (let c = 0; c < 3; c++) {
        pixels[at + c] = inside ? color[c] : CLEAN_BG[c];
      }
    }
  }
  return encodePng({ width: IMG_SIDE, height: IMG_SIDE, channels: 3, pixels });
}

export function mockRemoveBg(png: Uint8Array): Buffer {
  const raster = decodePng(png);
  const { width, height } = raster;
  const src = raster.pixels;
  const channels = raster.channels;
  const pixels = new Uint8Array(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    const r = src[i * channels];
    const g = src[i * channels + 1];
    const b = src[i * channels + 2];
    const isBg = r === CLEAN_BG[0] && g === CLEAN_BG[1] && b === CLEAN_BG[2];
    pixels[i * 4] = r;
    pixels[i * 4 + 1] = g;
    pixels[i * 4 + 2] = b;
    pixels[i * 4 + 3] = isBg ? 0 : 255;
  }
  return encodePng({ width, height, channels: 4, pixels });
}

export function mockRelight(pngRgba: Uint8Array, prompt: string, seed: bigint): Buffer {
  const raster = decodePng(pngRgba);
  if (raster.channels !== 4) {
    throw new Error("relight expects an RGBA foreground");
  }
  const { width, height } = raster;
  const src = raster.pixels;
  const rng = new SplitMix64(fnv1a64(prompt) ^ maskU64(seed) ^ RELIGHT_SALT);
  const c0 = [0, 0, 0];
  const c1 = [0, 0, 0];
  for (let c = 0; c < 3; c++) c0[c] = 20 + rng.randBelow(200);
  for (let c = 0; c < 3; c++) c1[c] = 20 + rng.randBelow(200);
  const direction = rng.randBelow(4);
  const tint = [0, 0, 0];
  for (let c = 0; c < 3; c++) tint[c] = 60 + rng.randBelow(81);

  let extent: number;
  if (direction === 0) extent = width - 1;
  else if (direction === 1) extent = height - 1;
  else extent = width + height - 2;
  const degenerate = extent <= 0;
  if (degenerate) extent = 1;

  const pixels = new Uint8Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      let u: number;
      if (degenerate) u = 0;
      else if (direction === 0) u = x;
      else if (direction === 1) u = y;
      else if (direction === 2) u = x + y;
      else u = width - 1 - x + y;
      const at = (y * width + x) * 4;
      const out = (y * width + x) * 3;
      const fg = src[at + 3] > 127;
      for (let c = 0; c < 3; c++) {
        if (fg) {
          pixels[out + c] = src[at + c];
        } else {
          const grad = Math.floor(
            (c0[c] * (extent - u) + c1[c] * u + Math.floor(extent / 2)) / extent
          );
          pixels[out + c] = Math.min(255, Math.floor((grad * tint[c]) / 100));
        }
      }
    }
  }
  return encodePng({ width, height, channels: 3, pixels });
}
