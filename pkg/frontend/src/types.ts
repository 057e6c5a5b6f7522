/** Wire formats exchanged with the scoring service. */

export type BloomName = "Remember" | "Understand" | "Apply" | "Analyze" | "Evaluate" | "Create";

export const BLOOM_ORDER: BloomName[] = [
  "Remember",
  "Understand",
  "Apply",
  "Analyze",
  "Evaluate",
  "Create",
];

export function bloomOrdinal(name: BloomName): number {
  return BLOOM_ORDER.indexOf(name) + 1;
}

export type Band = "Beginning" | "Developing" | "Proficient";

export interface Evidence {
  text: string;
  region: [number, number, number, number] | null;
}

export interface SrgNodeJson {
  id: string;
  concept: string;
  bloom: BloomName;
  evidence: Evidence;
}

export interface SrgEdgeJson {
  source: string;
  target: string;
  relation: string;
  evidence: Evidence;
}

export interface SrgJson {
  srg_version: "1";
  item_id: string;
  role: "gold" | "student";
  nodes: SrgNodeJson[];
  edges: SrgEdgeJson[];
}

export interface AlignmentJson {
  pairs: [string, string, number][];
}

export interface BreakdownJson {
  s: number;
  ged_cost: number;
  z: number;
  f_oa: number;
  alignment: AlignmentJson;
  dominant_bloom: BloomName | null;
  band: Band;
}

export interface DeficiencyJson {
  kind:
    | "missing_node"
    | "missing_edge"
    | "bloom_regression"
    | "extraneous_node"
    | "extraneous_edge"
    | "concept_mismatch";
  cause: "conceptual" | "perceptual";
  gold_node?: { id: string; concept: string };
  gold_edge?: [string, string, string];
  student_node?: { id: string; concept: string };
  student_edge?: [string, string, string];
  expected_bloom?: BloomName;
  edge_concepts?: [string, string, string];
}

export interface HintJson {
  hint_id: string;
  text: string;
  bloom_target: BloomName;
  deficiency: DeficiencyJson;
  overlay: { kind: "marker" | "arrow" | "label"; region: number[] | null; text: string | null }[];
}

export interface OverlayOpJson {
  op: "rect" | "arrow" | "label";
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  text: string | null;
  hint_id: string;
}

export interface ItemSummaryJson {
  item_id: string;
  prompt_text: string;
  image_refs: string[];
  highest_bloom: BloomName;
  gold_nodes: number;
  gold_edges: number;
}

export interface OntologyJson {
  root: string;
  concepts: { id: string; parent: string | null }[];
  relations: string[];
}

export interface ItemDetailJson {
  item_id: string;
  prompt_text: string;
  image_refs: string[];
  rubric_text: string;
  highest_bloom: BloomName;
  ontology: OntologyJson;
  scoring: {
    tau: number;
    band_thresholds: [number, number];
    gamma1: number;
    gamma2: number;
  };
}

export interface SessionStateJson {
  session_id: string;
  item_id: string;
  t: number;
  t_max: number;
  breakdown: BreakdownJson;
  hints: HintJson[];
  terminated: boolean;
  terminated_by: "threshold_met" | "max_iterations" | null;
}

export interface FeedbackResponseJson {
  breakdown: BreakdownJson;
  report: {
    similarity_score: number;
    proficiency_level: Band;
    strengths: string[];
    what_needs_attention: { missing_concepts: string[] };
    revision_guidance: HintJson[];
    reasoning_gaps: DeficiencyJson[];
  };
  report_text: string;
  overlay: OverlayOpJson[];
}

export interface TraceJson {
  t_max: number;
  terminated_by: "threshold_met" | "max_iterations";
  iterations: { t: number; graph: SrgJson; breakdown: BreakdownJson; hints: HintJson[] }[];
}

export interface ApiErrorBody {
  error: string;
}
