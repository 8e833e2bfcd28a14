/** Typed client for the grim server. All mutation goes through
 * createProject/generate/postEdit; everything else is GET.
 */

import { serializeEditSet, type EditDraft } from "./editset.js";
import type {
  EditResponse,
  ErrorWire,
  RenderPayload,
  SpecWire,
  StorylinesView,
  ValidationWire,
  VersionsView,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: unknown;

  constructor(status: number, code: string, message: string, details: unknown) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.details = details;
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let body: Partial<ErrorWire> = {};
  try {
    body = (await response.json()) as Partial<ErrorWire>;
  } catch {
    // non-JSON error body; fall back to the status line
  }
  return new ApiError(
    response.status,
    body.code ?? `HTTP-${response.status}`,
    body.message ?? response.statusText,
    body.details ?? null,
  );
}

export class GrimClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(
    method: string,
    path: string,
    body?: string,
  ): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = body;
      init.headers = { "content-type": "application/json" };
    }
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) throw await errorFrom(response);
    return response;
  }

  async createProject(spec: SpecWire): Promise<{ project_id: string }> {
    const response = await this.request(
      "POST",
      "/projects",
      JSON.stringify(spec),
    );
    return (await response.json()) as { project_id: string };
  }

  async generate(
    projectId: string,
  ): Promise<{ version: number; validation: ValidationWire }> {
    const response = await this.request(
      "POST",
      `/projects/${projectId}/generate`,
    );
    return (await response.json()) as {
      version: number;
      validation: ValidationWire;
    };
  }

  async versions(projectId: string): Promise<VersionsView> {
    const response = await this.request(
      "GET",
      `/projects/${projectId}/versions`,
    );
    return (await response.json()) as VersionsView;
  }

  async graph(projectId: string, version: number): Promise<RenderPayload> {
    const response = await this.request(
      "GET",
      `/projects/${projectId}/versions/${version}/graph`,
    );
    return (await response.json()) as RenderPayload;
  }

  async storylines(
    projectId: string,
    version: number,
  ): Promise<StorylinesView> {
    const response = await this.request(
      "GET",
      `/projects/${projectId}/versions/${version}/storylines`,
    );
    return (await response.json()) as StorylinesView;
  }

  /** POST the draft in the documented EditSet wire format. */
  async postEdit(projectId: string, draft: EditDraft): Promise<EditResponse> {
    const response = await this.request(
      "POST",
      `/projects/${projectId}/edits`,
      serializeEditSet(draft),
    );
    return (await response.json()) as EditResponse;
  }
}
