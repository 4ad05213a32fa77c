import { describe, expect, it } from 'vitest';

import { ApiError, GatewayClient } from '../src/api';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

function clientWith(handler: (url: string, init?: RequestInit) => Response | Promise<Response>) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const client = new GatewayClient('http://gw.test', async (url, init) => {
    calls.push({ url, init });
    return handler(url, init);
  });
  return { client, calls };
}

describe('GatewayClient', () => {
  it('creates sessions', async () => {
    const { client, calls } = clientWith(() => jsonResponse({ session_id: 's-1' }));
    expect(await client.createSession()).toBe('s-1');
    expect(calls[0].url).toBe('http://gw.test/api/session');
    expect(calls[0].init?.method).toBe('POST');
  });

  it('posts chat turns as JSON', async () => {
    const { client, calls } = clientWith(() =>
      jsonResponse({ text: 'hi', artifacts: [] }),
    );
    const reply = await client.chat('s-1', 'hello', ['a.epw']);
    expect(reply.text).toBe('hi');
    const body = JSON.parse(String(calls[0].init?.body));
    expect(body).toEqual({ session_id: 's-1', text: 'hello', file_refs: ['a.epw'] });
  });

  it('uploads files as multipart form data', async () => {
    const { client, calls } = clientWith(() => jsonResponse({ stored: ['a.txt'] }));
    const stored = await client.upload('s-1', [
      new File(['notes'], 'a.txt', { type: 'text/plain' }),
    ]);
    expect(stored).toEqual(['a.txt']);
    const form = calls[0].init?.body as FormData;
    expect(form.get('session_id')).toBe('s-1');
    expect((form.get('files') as File).name).toBe('a.txt');
  });

  it('surfaces the server error code and status', async () => {
    const { client } = clientWith(() =>
      jsonResponse({ code: 'busy', message: 'turn in progress' }, 409),
    );
    const err = await client.chat('s-1', 'x', []).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe('busy');
    expect(err.message).toBe('turn in progress');
  });

  it('tolerates non-JSON error bodies', async () => {
    const { client } = clientWith(() => new Response('gateway exploded', { status: 500 }));
    const err = await client.createSession().catch((e) => e);
    expect(err.code).toBe('http_500');
    expect(err.status).toBe(500);
  });

  it('wraps transport failures as status 0 network errors', async () => {
    const { client } = clientWith(() => {
      throw new TypeError('fetch failed');
    });
    const err = await client.createSession().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
    expect(err.code).toBe('network');
  });

  it('resolves artifact urls against the api base', () => {
    const client = new GatewayClient('http://gw.test');
    expect(
      client.artifactUrl({ artifact_id: 'x', media_type: 'image/svg+xml', url: '/api/artifacts/x' }),
    ).toBe('http://gw.test/api/artifacts/x');
  });
});
