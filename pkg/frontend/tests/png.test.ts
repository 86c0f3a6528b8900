import { describe, expect, it } from "vitest";

import { decodeGrayPng, encodeGrayPng } from "../src/png.js";
import { lcg } from "./helpers.js";

function randomPixels(n: number, seed: number): Uint8Array {
  const rand = lcg(seed);
  return Uint8Array.from({ length: n }, () => Math.floor(rand() * 256));
}

describe("gray PNG codec", () => {
  it("round-trips random pixels", async () => {
    const pixels = randomPixels(37 * 23, 1);
    const png = encodeGrayPng(pixels, 37, 23);
    const back = await decodeGrayPng(png);
    expect(back.width).toBe(37);
    expect(back.height).toBe(23);
    expect(back.pixels).toEqual(pixels);
  });

  it("round-trips buffers spanning several stored blocks", async () => {
    // 300x300 filtered data is ~90 kB, past the 65535-byte block limit
    const pixels = randomPixels(300 * 300, 2);
    const back = await decodeGrayPng(encodeGrayPng(pixels, 300, 300));
    expect(back.pixels).toEqual(pixels);
  });

  it("is deterministic", () => {
    const pixels = randomPixels(50 * 40, 3);
    expect(encodeGrayPng(pixels, 50, 40)).toEqual(encodeGrayPng(pixels, 50, 40));
  });

  it("rejects a size mismatch", () => {
    expect(() => encodeGrayPng(new Uint8Array(10), 5, 5)).toThrow(/does not match/);
  });

  it("rejects non-PNG bytes", async () => {
    await expect(decodeGrayPng(new Uint8Array([1, 2, 3, 4, 5, 6, 7, 8]))).rejects.toThrow(/not a PNG/);
  });

  it("rejects non-grayscale color types", async () => {
    const png = encodeGrayPng(new Uint8Array(16), 4, 4);
    png[8 + 8 + 9] = 2; // color type byte inside IHDR: pretend it is RGB
    await expect(decodeGrayPng(png)).rejects.toThrow(/grayscale/);
  });
});
