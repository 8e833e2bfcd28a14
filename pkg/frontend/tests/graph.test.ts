import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  buildGraphModel,
  checkPayloadShape,
  linkKey,
  pathwayColor,
  storylineLinkKeys,
} from "../src/graph.js";
import type { RenderPayload, StorylinesView } from "../src/types.js";

const payload = JSON.parse(
  readFileSync(new URL("./fixtures/little_red_minecraft_graph.json", import.meta.url), "utf8"),
) as RenderPayload;
const storylines = JSON.parse(
  readFileSync(new URL("./fixtures/little_red_minecraft_storylines.json", import.meta.url), "utf8"),
) as StorylinesView;

describe("checkPayloadShape", () => {
  it("accepts the fixture payload", () => {
    expect(checkPayloadShape(payload)).toEqual([]);
  });

  it("rejects non-objects and missing sections", () => {
    expect(checkPayloadShape(null)).toEqual(["payload is not a JSON object"]);
    expect(checkPayloadShape([1, 2])).toEqual(["payload is not a JSON object"]);
    expect(checkPayloadShape({ NODES: {} })).toEqual([
      "EDGES is missing or not an object",
    ]);
  });

  it("rejects malformed node entries", () => {
    const bad = {
      NODES: { Beat_1: [["None", 1, "x"]] },
      EDGES: { Beat_1: [[], []] },
    };
    expect(checkPayloadShape(bad)).toEqual([
      "NODES[Beat_1] is not a single 4-field entry",
    ]);
  });

  it("rejects malformed edge entries and keyset drift", () => {
    const bad = {
      NODES: { Beat_1: [["None", 1, "x", "1"]] },
      EDGES: { Beat_2: [[], [["Beat_2", 3]]] },
    };
    const problems = checkPayloadShape(bad);
    expect(problems).toContain(
      "EDGES[Beat_2] is not an [incoming, outgoing] pair of edge lists",
    );
    expect(problems).toContain("NODES and EDGES describe different key sets");
  });
});

describe("buildGraphModel", () => {
  const model = buildGraphModel(payload);

  it("renders one node per NODES key", () => {
    expect(model.nodes.length).toBe(Object.keys(payload.NODES).length);
    expect(model.nodes.length).toBe(10);
  });

  it("renders one link per deduplicated edge pair", () => {
    const pairs = new Set<string>();
    for (const [incoming, outgoing] of Object.values(payload.EDGES)) {
      for (const [a, b] of [...incoming, ...outgoing]) pairs.add(`${a}>${b}`);
    }
    expect(model.links.length).toBe(pairs.size);
    expect(model.links.length).toBe(19);
  });

  it("marks START/END entries as dummies with their key as hover text", () => {
    const start = model.nodes.find((n) => n.key === "START_1");
    expect(start?.dummy).toBe(true);
    expect(start?.hover).toBe("START_1");
    expect(start?.pathway).toBeNull();
  });

  it("gives beats a pathway and a hover of number plus description", () => {
    const beat4 = model.nodes.find((n) => n.key === "Beat_4");
    expect(beat4?.dummy).toBe(false);
    expect(beat4?.pathway).toBe("2");
    expect(beat4?.hover.startsWith("Beat 4: ")).toBe(true);
    expect(beat4?.hover.length).toBeGreaterThan("Beat 4: ".length);
  });
});

describe("pathwayColor", () => {
  it("is stable per pathway and distinct for neighbors", () => {
    expect(pathwayColor("1")).toBe(pathwayColor("1"));
    expect(pathwayColor("1")).not.toBe(pathwayColor("2"));
  });

  it("falls back to gray for dummies and junk", () => {
    expect(pathwayColor(null)).toBe("#888888");
    expect(pathwayColor("zero")).toBe("#888888");
  });
});

describe("storylineLinkKeys", () => {
  it("covers start, every hop, and end of the chosen storyline", () => {
    const line = storylines.storylines.find((s) => s.index === 1);
    expect(line).toBeDefined();
    const keys = storylineLinkKeys(line as StorylinesView["storylines"][0]);
    expect(keys.has(linkKey("START_1", "Beat_1"))).toBe(true);
    expect(keys.has(linkKey("Beat_1", "Beat_2"))).toBe(true);
    expect(keys.size).toBe(line!.beats.length + 1);
  });
});
