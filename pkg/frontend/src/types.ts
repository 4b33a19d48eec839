// Payload shapes mirrored from the service's JSON responses. The client
// renders these verbatim and never computes chart values on its own.

export type ChartKind = "bar" | "line" | "pie";
export type FlowName = "home" | "flow1" | "flow2" | "flow3";

export interface ChartStatePayload {
  kind: ChartKind;
  n_points: number;
  values: number[];
  colors: string[];
  y_max: number | null;
  title_image: string | null;
  label_images: string[];
  label_texts: string[];
  paused: boolean;
  error: string | null;
}

export interface ObservationPayload {
  id: number;
  center: [number, number];
  corners: [number, number][];
  orientation_deg: number;
  bit_errors: number;
}

export interface SnapshotPayload {
  snapshot_id: string;
  saved_at: string;
  kind: ChartKind;
  n_points: number;
  values: number[];
  colors: string[];
  y_max: number | null;
  image_file: string;
}

export interface StateSummary {
  session_id: string;
  flow: FlowName;
  phase: "scanning" | "axis_config" | "authoring" | null;
  chart: ChartStatePayload | null;
  saved_flag: boolean;
  snapshots?: SnapshotPayload[];
  observations?: ObservationPayload[];
  snapshot_id?: string;
}

export interface ApiErrorPayload {
  code: "bad_request" | "not_found" | "illegal_transition" | "storage_failure";
  message: string;
}
