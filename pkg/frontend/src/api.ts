export interface ArtifactRef {
  artifact_id: string;
  media_type: string;
  url: string;
}

export interface ChatResponse {
  text: string;
  artifacts: ArtifactRef[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface Gateway {
  createSession(signal?: AbortSignal): Promise<string>;
  upload(sessionId: string, files: File[], signal?: AbortSignal): Promise<string[]>;
  chat(
    sessionId: string,
    text: string,
    fileRefs: string[],
    signal?: AbortSignal,
  ): Promise<ChatResponse>;
  artifactUrl(ref: ArtifactRef): string;
}

export class GatewayClient implements Gateway {
  constructor(
    private readonly base = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init: RequestInit): Promise<any> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      if (init.signal?.aborted) throw err;
      throw new ApiError(0, 'network', `request failed: ${err}`);
    }
    if (!response.ok) {
      // error bodies carry {code, message}, but tolerate anything else
      let code = `http_${response.status}`;
      let message = `HTTP ${response.status}`;
      try {
        const body = await response.json();
        if (body && typeof body.code === 'string') code = body.code;
        if (body && typeof body.message === 'string') message = body.message;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, code, message);
    }
    return response.json();
  }

  async createSession(signal?: AbortSignal): Promise<string> {
    const body = await this.request('/api/session', { method: 'POST', signal });
    return body.session_id;
  }

  async upload(sessionId: string, files: File[], signal?: AbortSignal): Promise<string[]> {
    const form = new FormData();
    form.append('session_id', sessionId);
    for (const file of files) form.append('files', file, file.name);
    const body = await this.request('/api/upload', { method: 'POST', body: form, signal });
    return body.stored;
  }

  async chat(
    sessionId: string,
    text: string,
    fileRefs: string[],
    signal?: AbortSignal,
  ): Promise<ChatResponse> {
    return this.request('/api/chat', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ session_id: sessionId, text, file_refs: fileRefs }),
      signal,
    });
  }

  artifactUrl(ref: ArtifactRef): string {
    return this.base + ref.url;
  }
}
