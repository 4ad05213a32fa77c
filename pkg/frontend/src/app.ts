import { ApiError, type Gateway } from './api';
import type { AppConfig } from './config';
import {
  UiMessage,
  assistantMessage,
  errorMessage,
  pendingMessage,
  userMessage,
} from './state';

export const EXAMPLE_PROMPTS = [
  'Please visualize the daily temperature conditions for March in New York.',
  'Summarize the weather characteristics of the uploaded EPW file.',
  'Find certified precedent cases for naturally ventilated schools.',
  'What does an effective night purge strategy require?',
];

// layout regions: session controls, example prompts, message board,
// then the composer row: file upload, weather-map link, text input
const LAYOUT = `
<div class="shell">
  <aside class="side">
    <button id="new-qa" type="button">New QA</button>
    <div id="examples">
      <h3>Examples</h3>
    </div>
  </aside>
  <main class="main">
    <div id="board" aria-live="polite"></div>
    <div class="composer">
      <label id="upload-zone">
        <input id="file-input" type="file" multiple />
        <span id="file-note">Attach files</span>
      </label>
      <button id="epw-map" type="button">EPW Map</button>
      <textarea id="query-input" rows="2" placeholder="Ask about weather data or green building design"></textarea>
      <button id="send" type="button">Send</button>
    </div>
  </main>
</div>`;

export interface AppHandles {
  sendQuery(): Promise<void>;
  newQa(): Promise<string>;
  openEpwMap(): void;
  setFiles(files: File[]): void;
  sessionId(): string | null;
  messages(): readonly UiMessage[];
}

export function mountApp(
  root: HTMLElement,
  api: Gateway,
  config: AppConfig,
  openUrl: (url: string) => void = (url) => window.open(url, '_blank'),
): AppHandles {
  root.innerHTML = LAYOUT;
  const doc = root.ownerDocument;
  const pick = <T extends HTMLElement>(sel: string) => root.querySelector(sel) as T;

  const board = pick<HTMLDivElement>('#board');
  const input = pick<HTMLTextAreaElement>('#query-input');
  const sendBtn = pick<HTMLButtonElement>('#send');
  const newQaBtn = pick<HTMLButtonElement>('#new-qa');
  const mapBtn = pick<HTMLButtonElement>('#epw-map');
  const fileInput = pick<HTMLInputElement>('#file-input');
  const fileNote = pick<HTMLSpanElement>('#file-note');
  const examples = pick<HTMLDivElement>('#examples');

  let session: string | null = null;
  let selected: File[] = [];
  let inFlight: AbortController | null = null;
  let board_: UiMessage[] = [];

  for (const prompt of EXAMPLE_PROMPTS) {
    const btn = doc.createElement('button');
    btn.type = 'button';
    btn.className = 'example';
    btn.textContent = prompt;
    // fills the box only; sending stays an explicit act
    btn.addEventListener('click', () => {
      input.value = prompt;
      input.focus();
    });
    examples.appendChild(btn);
  }

  function render() {
    board.innerHTML = '';
    for (const msg of board_) {
      const bubble = doc.createElement('div');
      bubble.className =
        `bubble ${msg.sender}` +
        (msg.error ? ' error' : '') +
        (msg.pending ? ' pending' : '');
      const text = doc.createElement('p');
      text.textContent = msg.text;
      bubble.appendChild(text);
      for (const url of msg.artifactUrls) {
        const img = doc.createElement('img');
        img.src = url;
        img.alt = 'chart artifact';
        bubble.appendChild(img);
      }
      board.appendChild(bubble);
    }
  }

  function swap(from: UiMessage, to: UiMessage) {
    const at = board_.indexOf(from);
    if (at >= 0) board_[at] = to;
  }

  function updateFileNote() {
    fileNote.textContent = selected.length
      ? `${selected.length} file${selected.length > 1 ? 's' : ''} attached`
      : 'Attach files';
  }

  function setFiles(files: File[]) {
    selected = files.slice();
    updateFileNote();
  }

  async function sendQuery(): Promise<void> {
    const text = input.value.trim();
    if (!text || sendBtn.disabled) return;
    sendBtn.disabled = true;
    const controller = new AbortController();
    inFlight = controller;

    board_.push(userMessage(text));
    const placeholder = pendingMessage();
    board_.push(placeholder);
    render();

    try {
      if (!session) session = await api.createSession(controller.signal);
      let refs: string[] = [];
      if (selected.length) {
        refs = await api.upload(session, selected, controller.signal);
      }
      const reply = await api.chat(session, text, refs, controller.signal);
      swap(
        placeholder,
        assistantMessage(reply.text, reply.artifacts.map((a) => api.artifactUrl(a))),
      );
      input.value = '';
      setFiles([]);
      fileInput.value = '';
      sendBtn.disabled = false;
    } catch (err) {
      if (controller.signal.aborted) return; // a New QA click discarded this turn
      if (err instanceof ApiError && err.status === 409) {
        // another turn owns the session; stay disabled until New QA
        swap(placeholder, errorMessage('The session is busy with another turn.'));
        sendBtn.dataset.busy = 'true';
      } else {
        const detail = err instanceof ApiError ? err.message : 'network failure';
        swap(placeholder, errorMessage(`Request failed: ${detail}`));
        sendBtn.disabled = false; // input stays put so the user can retry
      }
    } finally {
      if (inFlight === controller) inFlight = null;
      render();
    }
  }

  async function newQa(): Promise<string> {
    inFlight?.abort();
    inFlight = null;
    board_ = [];
    render();
    delete sendBtn.dataset.busy;
    sendBtn.disabled = true;
    try {
      session = await api.createSession();
    } catch (err) {
      board_.push(errorMessage(`Could not start a session: ${err}`));
      render();
      throw err;
    } finally {
      sendBtn.disabled = false;
    }
    return session;
  }

  function openEpwMap() {
    openUrl(config.epwMapUrl);
  }

  newQaBtn.addEventListener('click', () => void newQa());
  mapBtn.addEventListener('click', openEpwMap);
  sendBtn.addEventListener('click', () => void sendQuery());
  input.addEventListener('keydown', (event) => {
    if (event.key === 'Enter' && !event.shiftKey) {
      event.preventDefault();
      void sendQuery();
    }
  });
  fileInput.addEventListener('change', () => {
    setFiles(Array.from(fileInput.files ?? []));
  });

  return {
    sendQuery,
    newQa,
    openEpwMap,
    setFiles,
    sessionId: () => session,
    messages: () => board_,
  };
}
