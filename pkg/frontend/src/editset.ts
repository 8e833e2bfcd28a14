/** Edit drafts: local consistency checks and the wire serialization.
 *
 * The serialized form is exactly what POST /edits expects:
 * {"nodes_added":[{"id":18,"description":"..."}],"nodes_deleted":[],
 *  "edges_added":[[2,18]],"edges_deleted":[]}
 */

export type Endpoint = number | string;
export type Edge = [Endpoint, Endpoint];

export interface AddedNode {
  id: number;
  description: string;
}

export interface EditDraft {
  nodesAdded: AddedNode[];
  nodesDeleted: number[];
  edgesAdded: Edge[];
  edgesDeleted: Edge[];
}

export interface KnownGraph {
  beatIds: Set<number>;
  labels: Set<string>;
}

export function emptyDraft(): EditDraft {
  return { nodesAdded: [], nodesDeleted: [], edgesAdded: [], edgesDeleted: [] };
}

export function draftIsEmpty(draft: EditDraft): boolean {
  return (
    !draft.nodesAdded.length &&
    !draft.nodesDeleted.length &&
    !draft.edgesAdded.length &&
    !draft.edgesDeleted.length
  );
}

/** Next free beat id, matching how the server assigns them. */
export function nextBeatId(known: KnownGraph, draft: EditDraft): number {
  let top = 0;
  for (const id of known.beatIds) top = Math.max(top, id);
  for (const node of draft.nodesAdded) top = Math.max(top, node.id);
  return top + 1;
}

function describeEndpoint(endpoint: Endpoint): string {
  return typeof endpoint === "number" ? `beat ${endpoint}` : endpoint;
}

/** Local consistency problems; the draft only goes on the wire when this
 * comes back empty. */
export function draftProblems(draft: EditDraft, known: KnownGraph): string[] {
  const problems: string[] = [];
  if (draftIsEmpty(draft)) {
    problems.push("the draft is empty");
    return problems;
  }

  const addedIds = new Set<number>();
  for (const node of draft.nodesAdded) {
    if (!node.description.trim()) {
      problems.push(`added beat ${node.id} has no description`);
    }
    if (known.beatIds.has(node.id)) {
      problems.push(`added beat ${node.id} clashes with an existing beat`);
    }
    if (addedIds.has(node.id)) {
      problems.push(`beat ${node.id} is added twice`);
    }
    addedIds.add(node.id);
  }

  const deleted = new Set(draft.nodesDeleted);
  for (const id of deleted) {
    if (!known.beatIds.has(id)) {
      problems.push(`cannot delete unknown beat ${id}`);
    }
  }

  const endpointOk = (endpoint: Endpoint): boolean =>
    typeof endpoint === "number"
      ? known.beatIds.has(endpoint) || addedIds.has(endpoint)
      : known.labels.has(endpoint);

  for (const [a, b] of draft.edgesAdded) {
    for (const endpoint of [a, b]) {
      if (typeof endpoint === "number" && deleted.has(endpoint)) {
        problems.push(
          `edge ${describeEndpoint(a)} -> ${describeEndpoint(b)} touches deleted beat ${endpoint}`,
        );
      } else if (!endpointOk(endpoint)) {
        problems.push(
          `edge ${describeEndpoint(a)} -> ${describeEndpoint(b)} references unknown ${describeEndpoint(endpoint)}`,
        );
      }
    }
  }
  for (const [a, b] of draft.edgesDeleted) {
    for (const endpoint of [a, b]) {
      if (typeof endpoint === "number" && !known.beatIds.has(endpoint)) {
        problems.push(
          `deleted edge ${describeEndpoint(a)} -> ${describeEndpoint(b)} references unknown beat ${endpoint}`,
        );
      } else if (typeof endpoint === "string" && !known.labels.has(endpoint)) {
        problems.push(
          `deleted edge ${describeEndpoint(a)} -> ${describeEndpoint(b)} references unknown ${endpoint}`,
        );
      }
    }
  }
  return problems;
}

/** Exact wire bytes for POST /edits. */
export function serializeEditSet(draft: EditDraft): string {
  return JSON.stringify({
    nodes_added: draft.nodesAdded.map((n) => ({
      id: n.id,
      description: n.description,
    })),
    nodes_deleted: draft.nodesDeleted,
    edges_added: draft.edgesAdded,
    edges_deleted: draft.edgesDeleted,
  });
}
