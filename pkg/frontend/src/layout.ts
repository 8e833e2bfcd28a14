/** Layered left-to-right layout: layer = longest-path rank from the START
 * nodes. Cycles are broken for layout only (back edges found by DFS are
 * ignored when ranking; they still render).
 */

import type { GraphModel, VisualLink } from "./graph.js";

export interface Position {
  layer: number;
  row: number;
}

function nodeOrder(key: string): [number, number, string] {
  const match = /^(Beat|START|END)_(\d+)$/.exec(key);
  if (match) {
    const kind = match[1] === "Beat" ? 0 : match[1] === "START" ? 1 : 2;
    return [kind, Number.parseInt(match[2] as string, 10), key];
  }
  return [3, 0, key];
}

function compareKeys(a: string, b: string): number {
  const [ka, na, sa] = nodeOrder(a);
  const [kb, nb, sb] = nodeOrder(b);
  if (ka !== kb) return ka - kb;
  if (na !== nb) return na - nb;
  return sa < sb ? -1 : sa > sb ? 1 : 0;
}

/** Drop edges that close a cycle, walking depth-first from the roots. */
export function acyclicLinks(
  keys: string[],
  links: VisualLink[],
  roots: string[],
): VisualLink[] {
  const outgoing = new Map<string, VisualLink[]>();
  for (const key of keys) outgoing.set(key, []);
  for (const link of links) outgoing.get(link.source)?.push(link);

  const kept: VisualLink[] = [];
  const done = new Set<string>();
  const onStack = new Set<string>();

  // iterative DFS; an edge into the active stack is a back edge
  for (const root of roots) {
    if (done.has(root)) continue;
    const stack: Array<{ key: string; next: number }> = [
      { key: root, next: 0 },
    ];
    onStack.add(root);
    while (stack.length) {
      const frame = stack[stack.length - 1] as { key: string; next: number };
      const out = outgoing.get(frame.key) ?? [];
      if (frame.next < out.length) {
        const link = out[frame.next] as VisualLink;
        frame.next += 1;
        if (onStack.has(link.target)) continue; // back edge, dropped
        kept.push(link);
        if (!done.has(link.target)) {
          done.add(link.target);
          onStack.add(link.target);
          stack.push({ key: link.target, next: 0 });
        }
      } else {
        onStack.delete(frame.key);
        stack.pop();
      }
    }
    done.add(root);
  }
  return kept;
}

/** Assign every node a (layer, row); disconnected nodes land in layer 0. */
export function layeredLayout(model: GraphModel): Map<string, Position> {
  const keys = model.nodes.map((n) => n.key);
  const incomingCount = new Map<string, number>(keys.map((k) => [k, 0]));
  for (const link of model.links) {
    incomingCount.set(link.target, (incomingCount.get(link.target) ?? 0) + 1);
  }
  let roots = keys.filter((k) => k.startsWith("START_"));
  if (!roots.length) roots = keys.filter((k) => !incomingCount.get(k));
  roots = [...roots].sort(compareKeys);

  const kept = acyclicLinks(keys, model.links, roots);
  const keptIncoming = new Map<string, number>(keys.map((k) => [k, 0]));
  const outgoing = new Map<string, string[]>(keys.map((k) => [k, []]));
  for (const link of kept) {
    keptIncoming.set(link.target, (keptIncoming.get(link.target) ?? 0) + 1);
    outgoing.get(link.source)?.push(link.target);
  }

  // longest-path rank over the kept edges, in topological order
  const layer = new Map<string, number>();
  const queue = keys.filter((k) => !keptIncoming.get(k));
  for (const key of queue) layer.set(key, 0);
  while (queue.length) {
    const key = queue.shift() as string;
    const rank = layer.get(key) ?? 0;
    for (const target of outgoing.get(key) ?? []) {
      layer.set(target, Math.max(layer.get(target) ?? 0, rank + 1));
      const left = (keptIncoming.get(target) ?? 0) - 1;
      keptIncoming.set(target, left);
      if (left === 0) queue.push(target);
    }
  }

  const byLayer = new Map<number, string[]>();
  for (const key of keys) {
    const rank = layer.get(key) ?? 0;
    if (!byLayer.has(rank)) byLayer.set(rank, []);
    (byLayer.get(rank) as string[]).push(key);
  }
  const positions = new Map<string, Position>();
  for (const [rank, members] of byLayer) {
    members.sort(compareKeys);
    members.forEach((key, row) => positions.set(key, { layer: rank, row }));
  }
  return positions;
}
