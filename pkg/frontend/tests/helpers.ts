/** Shared test utilities: a seeded PRNG and a reader for the store-mode
 * ZIP archives the server exports. */

export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

/** Parse a ZIP consisting of stored (uncompressed) entries. */
export function parseStoredZip(data: Uint8Array): Map<string, Uint8Array> {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const entries = new Map<string, Uint8Array>();
  let pos = 0;
  while (pos + 4 <= data.length) {
    const sig = view.getUint32(pos, true);
    if (sig !== 0x04034b50) break; // central directory reached
    const method = view.getUint16(pos + 8, true);
    const compressedSize = view.getUint32(pos + 18, true);
    const nameLen = view.getUint16(pos + 26, true);
    const extraLen = view.getUint16(pos + 28, true);
    const name = new TextDecoder().decode(data.subarray(pos + 30, pos + 30 + nameLen));
    if (method !== 0) throw new Error(`entry ${name} is compressed (method ${method})`);
    const start = pos + 30 + nameLen + extraLen;
    entries.set(name, data.subarray(start, start + compressedSize));
    pos = start + compressedSize;
  }
  if (entries.size === 0) throw new Error("no ZIP entries found");
  return entries;
}
