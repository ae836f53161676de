// Shapes of the review service's JSON API (see the service docs; the UI
// consumes nothing beyond these).

export interface SceneRef {
  start_frame: number;
  end_frame: number;
}

export interface CandidateSummary {
  track_id: number;
  asd_mean: number;
  face_distance: number;
  passes_asd: boolean;
  passes_face: boolean;
  mean_area: number;
}

export interface SceneSummary {
  scene: SceneRef;
  chosen_track: number | null;
  candidates: CandidateSummary[];
  embeddings?: Record<string, number[]>;
}

export type ItemStatus = "pending" | "accepted" | "rejected";

export interface ReviewItem {
  snippet_id: string;
  status: ItemStatus;
  text: string;
  revision: number;
  score: number | null;
  podcast_date: string;
  start_ms: number;
  media: Record<string, string>;
  scenes: SceneSummary[];
}

export interface ItemsPage {
  items: ReviewItem[];
  next_cursor: string | null;
}

export interface PromoteReference {
  scene: SceneRef;
  track_id: number;
}

export interface DecisionBody {
  base_revision: number;
  verdict: "accept" | "reject";
  corrected_text?: string;
  promote_reference?: PromoteReference;
  reviewer?: string;
}

export interface ListFilter {
  status?: ItemStatus;
  year_from?: number;
  year_to?: number;
  min_score?: number;
  cursor?: string;
  page_size?: number;
}
