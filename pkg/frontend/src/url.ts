/** Selection picks serialize into the URL hash so configurations are
 * shareable links. */

export function encodeSelection(picks: string[]): string {
  if (!picks.length) return "";
  return "#s=" + picks.map(encodeURIComponent).join(",");
}

export function decodeSelection(hash: string): string[] {
  const match = /^#s=(.+)$/.exec(hash);
  if (!match) return [];
  return match[1].split(",").filter(Boolean).map(decodeURIComponent);
}
