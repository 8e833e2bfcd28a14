/** Wire shapes exchanged with the grim server. */

/** One NODES entry: ["None", nr_beat, description, pathway]. */
export type NodeTuple = [string, number | null, string | null, string | null];

export type EdgePair = [string, string];

/** One EDGES entry: [incoming pairs, outgoing pairs]. */
export type EdgeTuple = [EdgePair[], EdgePair[]];

export interface RenderPayload {
  NODES: Record<string, NodeTuple[]>;
  EDGES: Record<string, EdgeTuple>;
}

export interface SpecWire {
  story: string;
  setting: string;
  n_starts: number;
  n_endings: number;
  n_storylines: number;
}

export interface BeatWire {
  id: number;
  description: string;
}

export interface StorylineWire {
  index: number;
  start: string;
  beats: number[];
  end: string;
}

export interface StorylinesView {
  spec: SpecWire;
  beats: BeatWire[];
  storylines: StorylineWire[];
  starts: Record<string, number>;
  ends: Record<string, number>;
  declared_common_beats: number[];
}

export interface VersionSummary {
  version: number;
  provenance: Record<string, unknown>;
  beats: number;
  storylines: number;
}

export interface VersionsView {
  project_id: string;
  spec: SpecWire;
  versions: VersionSummary[];
}

export interface ViolationWire {
  code: string;
  severity: string;
  message: string;
  subjects: Array<number | string>;
}

export interface ValidationWire {
  violations: ViolationWire[];
  stats: Record<string, unknown>;
}

export interface EditCheckWire {
  check_id: string;
  passed: boolean;
  severity: string;
  subjects: Array<number | string>;
  message: string;
}

export interface DiffWire {
  beats_added: number[];
  beats_removed: number[];
  storylines_added: number[];
  storylines_removed: number[];
  storylines_changed: number[];
  edges_added: Array<Array<number | string>>;
  edges_removed: Array<Array<number | string>>;
}

export interface EditResponse {
  new_version: number;
  attempts: number;
  edit_report: { checks: EditCheckWire[] };
  validation: ValidationWire;
  diff: DiffWire;
}

/** Body of every non-2xx response. */
export interface ErrorWire {
  code: string;
  message: string;
  details: unknown;
}

/** One entry of an exhausted edit's details list. */
export interface AttemptReport {
  attempt: number;
  stage: string;
  problems: string[];
}
