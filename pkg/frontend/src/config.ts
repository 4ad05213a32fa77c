// Build-time configuration with optional runtime overrides: a host page may
// define window.GBQA_API_BASE / window.GBQA_EPW_MAP_URL before loading the app.

export interface AppConfig {
  apiBase: string;
  epwMapUrl: string;
}

export const DEFAULT_EPW_MAP_URL = 'https://www.ladybug.tools/epwmap/';

interface ConfigGlobals {
  GBQA_API_BASE?: string;
  GBQA_EPW_MAP_URL?: string;
}

export function resolveConfig(globals: ConfigGlobals = {}): AppConfig {
  return {
    apiBase: globals.GBQA_API_BASE ?? '',
    epwMapUrl: globals.GBQA_EPW_MAP_URL ?? DEFAULT_EPW_MAP_URL,
  };
}
