// Payload shapes of the service's SSE events and JSON endpoints.

export type SseEventName = "text" | "phase" | "repair" | "diagram" | "error" | "done";

export interface TextPayload {
  text: string;
}

export interface RepairIssue {
  category: string;
  detail: string;
  repaired: boolean;
}

export interface RepairPayload {
  issues: RepairIssue[];
  passes_applied: string[];
}

export interface DiagramPayload {
  xml: string;
  version: number;
}

export interface ErrorPayload {
  message: string;
  kind: string | null;
}

export interface DonePayload {
  status: "ok" | "error" | "stopped";
  correction_iterations: number;
  version: number | null;
  tokens: { input: number; output: number };
}

export interface ServerEvent {
  name: SseEventName;
  data: TextPayload | RepairPayload | DiagramPayload | ErrorPayload | DonePayload;
}

export interface HistoryEntry {
  version: number;
  timestamp: string;
  summary: string;
  origin: string;
}

export interface ProviderSettings {
  kind: "mock" | "http";
  endpoint_url: string;
  api_key_env_var_name: string;
  model_id: string;
  max_output_tokens: number;
  temperature: number;
  script_path: string;
}

export interface LayoutSettings {
  orientation: "horizontal" | "vertical";
  node_gap: number;
  layer_gap: number;
  default_width: number;
  default_height: number;
}

export interface Settings {
  provider: ProviderSettings;
  layout: LayoutSettings;
  token_budget: number;
}
