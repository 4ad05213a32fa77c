import { GatewayClient } from './api';
import { mountApp } from './app';
import { resolveConfig } from './config';

const config = resolveConfig(window as Record<string, any>);
const root = document.getElementById('app');
if (root) {
  mountApp(root, new GatewayClient(config.apiBase), config);
}
