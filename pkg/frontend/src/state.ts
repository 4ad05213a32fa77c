export type Sender = 'user' | 'assistant';

export interface UiMessage {
  sender: Sender;
  text: string;
  artifactUrls: string[];
  pending: boolean;
  error?: boolean;
}

export function userMessage(text: string): UiMessage {
  return { sender: 'user', text, artifactUrls: [], pending: false };
}

export function pendingMessage(): UiMessage {
  return { sender: 'assistant', text: '…', artifactUrls: [], pending: true };
}

/** Assistant reply; repeated artifact urls collapse so each renders once. */
export function assistantMessage(text: string, artifactUrls: string[]): UiMessage {
  return { sender: 'assistant', text, artifactUrls: uniqueUrls(artifactUrls), pending: false };
}

export function errorMessage(text: string): UiMessage {
  return { sender: 'assistant', text, artifactUrls: [], pending: false, error: true };
}

export function uniqueUrls(urls: string[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const url of urls) {
    if (!seen.has(url)) {
      seen.add(url);
      out.push(url);
    }
  }
  return out;
}
