/** DOM wiring: renders the graph as SVG and drives the edit loop. The
 * logic lives in the imported modules; this file only touches the page.
 */

import { GrimClient } from "./api.js";
import {
  buildGraphModel,
  checkPayloadShape,
  linkKey,
  pathwayColor,
  storylineLinkKeys,
  type GraphModel,
} from "./graph.js";
import { layeredLayout } from "./layout.js";
import { nextBeatId, type Endpoint, type KnownGraph } from "./editset.js";
import { ViewState } from "./viewstate.js";
import type { DiffWire, StorylinesView } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const X_STEP = 150;
const Y_STEP = 95;
const MARGIN = 70;

const state = new ViewState();
const client = new GrimClient("");
let storylinesView: StorylinesView | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  text?: string,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (text !== undefined) node.textContent = text;
  if (className) node.className = className;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function banner(message: string | null): void {
  const box = byId<HTMLDivElement>("banner");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}

function known(): KnownGraph {
  const view = storylinesView;
  if (!view) return { beatIds: new Set(), labels: new Set() };
  return {
    beatIds: new Set(view.beats.map((b) => b.id)),
    labels: new Set([...Object.keys(view.starts), ...Object.keys(view.ends)]),
  };
}

function diffMarks(diff: DiffWire | null): {
  nodes: Set<string>;
  links: Set<string>;
} {
  const nodes = new Set<string>();
  const links = new Set<string>();
  if (diff) {
    for (const id of diff.beats_added) nodes.add(`Beat_${id}`);
    for (const [a, b] of diff.edges_added as Array<[Endpoint, Endpoint]>) {
      const src = typeof a === "number" ? `Beat_${a}` : String(a);
      const dst = typeof b === "number" ? `Beat_${b}` : String(b);
      links.add(linkKey(src, dst));
    }
  }
  return { nodes, links };
}

function renderGraph(model: GraphModel): void {
  const svg = byId<HTMLElement>("graph") as unknown as SVGSVGElement;
  while (svg.lastChild) svg.removeChild(svg.lastChild);

  const positions = layeredLayout(model);
  let maxLayer = 0;
  let maxRow = 0;
  for (const pos of positions.values()) {
    maxLayer = Math.max(maxLayer, pos.layer);
    maxRow = Math.max(maxRow, pos.row);
  }
  svg.setAttribute(
    "viewBox",
    `0 0 ${maxLayer * X_STEP + 2 * MARGIN} ${maxRow * Y_STEP + 2 * MARGIN}`,
  );

  const defs = document.createElementNS(SVG_NS, "defs");
  defs.innerHTML =
    '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ' +
    'markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
    '<path d="M 0 0 L 10 5 L 0 10 z" fill="#666"></path></marker>';
  svg.appendChild(defs);

  const coord = (key: string): [number, number] => {
    const pos = positions.get(key) ?? { layer: 0, row: 0 };
    return [MARGIN + pos.layer * X_STEP, MARGIN + pos.row * Y_STEP];
  };

  const marks = diffMarks(state.lastDiff);
  const highlighted =
    state.highlight !== null && storylinesView
      ? storylineLinkKeys(
          storylinesView.storylines.find((s) => s.index === state.highlight) ??
            { index: 0, start: "", beats: [], end: "" },
        )
      : new Set<string>();

  for (const link of model.links) {
    const [x1, y1] = coord(link.source);
    const [x2, y2] = coord(link.target);
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("marker-end", "url(#arrow)");
    const key = linkKey(link.source, link.target);
    let cls = "link";
    if (highlighted.has(key)) cls += " highlight";
    if (marks.links.has(key)) cls += " added";
    line.setAttribute("class", cls);
    svg.appendChild(line);
  }

  for (const node of model.nodes) {
    const [x, y] = coord(node.key);
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute(
      "class",
      "node" +
        (node.dummy ? " dummy" : "") +
        (marks.nodes.has(node.key) ? " added" : ""),
    );
    let shape: SVGElement;
    if (node.dummy) {
      // dummies (START/END markers) draw as squares, beats as circles
      shape = document.createElementNS(SVG_NS, "rect");
      shape.setAttribute("x", String(x - 14));
      shape.setAttribute("y", String(y - 14));
      shape.setAttribute("width", "28");
      shape.setAttribute("height", "28");
      shape.setAttribute("fill", pathwayColor(null));
    } else {
      shape = document.createElementNS(SVG_NS, "circle");
      shape.setAttribute("cx", String(x));
      shape.setAttribute("cy", String(y));
      shape.setAttribute("r", "16");
      shape.setAttribute("fill", pathwayColor(node.pathway));
    }
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = node.hover;
    shape.appendChild(title);
    group.appendChild(shape);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(y + 30));
    label.setAttribute("text-anchor", "middle");
    label.textContent = node.key;
    group.appendChild(label);
    svg.appendChild(group);
  }
}

async function loadVersion(version: number): Promise<void> {
  if (!state.projectId) return;
  const payload = await client.graph(state.projectId, version);
  const problems = checkPayloadShape(payload);
  if (problems.length) {
    banner(`graph payload failed its shape check: ${problems.join("; ")}`);
    return;
  }
  banner(null);
  storylinesView = await client.storylines(state.projectId, version);
  state.version = version;
  renderGraph(buildGraphModel(payload));
  renderStorylinePicker();
  renderDraft();
  await renderVersions();
}

async function renderVersions(): Promise<void> {
  if (!state.projectId) return;
  const view = await client.versions(state.projectId);
  const list = byId<HTMLUListElement>("versions");
  list.textContent = "";
  for (const entry of view.versions) {
    const item = el(
      "li",
      `v${entry.version} (${entry.beats} beats, ${entry.storylines} storylines)`,
    );
    if (entry.version === state.version) item.className = "current";
    item.addEventListener("click", () => void loadVersion(entry.version));
    list.appendChild(item);
  }
}

function renderStorylinePicker(): void {
  const picker = byId<HTMLSelectElement>("storyline");
  picker.textContent = "";
  picker.appendChild(new Option("no highlight", ""));
  for (const line of storylinesView?.storylines ?? []) {
    picker.appendChild(new Option(`Storyline ${line.index}`, String(line.index)));
  }
  picker.value = state.highlight === null ? "" : String(state.highlight);
}

function describeDraft(): string[] {
  const parts: string[] = [];
  for (const n of state.draft.nodesAdded)
    parts.push(`add Beat ${n.id}: ${n.description}`);
  for (const id of state.draft.nodesDeleted) parts.push(`delete Beat ${id}`);
  for (const [a, b] of state.draft.edgesAdded) parts.push(`add edge ${a} -> ${b}`);
  for (const [a, b] of state.draft.edgesDeleted)
    parts.push(`delete edge ${a} -> ${b}`);
  return parts;
}

function renderDraft(): void {
  const list = byId<HTMLUListElement>("draft");
  list.textContent = "";
  describeDraft().forEach((line, i) => {
    const item = el("li", line);
    const remove = el("button", "x");
    remove.addEventListener("click", () => {
      removeDraftEntry(i);
      renderDraft();
    });
    item.appendChild(remove);
    list.appendChild(item);
  });
  byId<HTMLButtonElement>("submit").disabled =
    state.draftEmpty || state.submitting;

  const failures = byId<HTMLUListElement>("failures");
  failures.textContent = "";
  for (const line of state.lastFailures) failures.appendChild(el("li", line));
  byId<HTMLDivElement>("retry").style.display = state.retryPrompt
    ? "block"
    : "none";
}

function removeDraftEntry(index: number): void {
  const d = state.draft;
  const sizes = [
    d.nodesAdded.length,
    d.nodesDeleted.length,
    d.edgesAdded.length,
    d.edgesDeleted.length,
  ];
  let i = index;
  if (i < sizes[0]!) return void d.nodesAdded.splice(i, 1);
  i -= sizes[0]!;
  if (i < sizes[1]!) return void d.nodesDeleted.splice(i, 1);
  i -= sizes[1]!;
  if (i < sizes[2]!) return void d.edgesAdded.splice(i, 1);
  i -= sizes[2]!;
  d.edgesDeleted.splice(i, 1);
}

function parseEndpoint(text: string): Endpoint {
  const trimmed = text.trim();
  return /^\d+$/.test(trimmed) ? Number.parseInt(trimmed, 10) : trimmed;
}

function parseEdge(text: string): [Endpoint, Endpoint] | null {
  const parts = text.split(":");
  if (parts.length !== 2 || !parts[0]?.trim() || !parts[1]?.trim()) return null;
  return [parseEndpoint(parts[0]), parseEndpoint(parts[1])];
}

async function submit(): Promise<void> {
  const result = await state.submitDraft(client, known());
  if (result.status === "applied" && result.response) {
    await loadVersion(result.response.new_version);
  }
  renderDraft();
}

function wireControls(): void {
  byId<HTMLButtonElement>("create").addEventListener("click", () => {
    void (async () => {
      try {
        const spec = {
          story: byId<HTMLInputElement>("story").value,
          setting: byId<HTMLInputElement>("setting").value,
          n_starts: Number(byId<HTMLInputElement>("starts").value),
          n_endings: Number(byId<HTMLInputElement>("ends").value),
          n_storylines: Number(byId<HTMLInputElement>("lines").value),
        };
        const created = await client.createProject(spec);
        state.projectId = created.project_id;
        state.lastDiff = null;
        const generated = await client.generate(created.project_id);
        await loadVersion(generated.version);
      } catch (error) {
        banner(String(error));
      }
    })();
  });

  byId<HTMLButtonElement>("load").addEventListener("click", () => {
    void (async () => {
      try {
        state.projectId = byId<HTMLInputElement>("project-id").value.trim();
        state.lastDiff = null;
        const view = await client.versions(state.projectId);
        const last = view.versions[view.versions.length - 1];
        if (last) await loadVersion(last.version);
      } catch (error) {
        banner(String(error));
      }
    })();
  });

  byId<HTMLSelectElement>("storyline").addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    state.highlight = value === "" ? null : Number(value);
    if (state.projectId && state.version !== null)
      void loadVersion(state.version);
  });

  byId<HTMLButtonElement>("add-node").addEventListener("click", () => {
    const input = byId<HTMLInputElement>("node-desc");
    if (!input.value.trim()) return;
    state.draft.nodesAdded.push({
      id: nextBeatId(known(), state.draft),
      description: input.value.trim(),
    });
    input.value = "";
    renderDraft();
  });

  byId<HTMLButtonElement>("del-node").addEventListener("click", () => {
    const input = byId<HTMLInputElement>("node-id");
    const id = Number.parseInt(input.value, 10);
    if (Number.isFinite(id)) state.draft.nodesDeleted.push(id);
    input.value = "";
    renderDraft();
  });

  const edgeButton = (buttonId: string, inputId: string, added: boolean) => {
    byId<HTMLButtonElement>(buttonId).addEventListener("click", () => {
      const input = byId<HTMLInputElement>(inputId);
      const edge = parseEdge(input.value);
      if (!edge) {
        banner(`"${input.value}" is not of the form A:B`);
        return;
      }
      banner(null);
      (added ? state.draft.edgesAdded : state.draft.edgesDeleted).push(edge);
      input.value = "";
      renderDraft();
    });
  };
  edgeButton("add-edge", "edge-new", true);
  edgeButton("del-edge", "edge-old", false);

  byId<HTMLButtonElement>("submit").addEventListener("click", () => void submit());
  byId<HTMLButtonElement>("retry-submit").addEventListener(
    "click",
    () => void submit(),
  );
}

wireControls();
