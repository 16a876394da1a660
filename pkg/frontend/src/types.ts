/** JSON shapes exchanged with the session service. */

export interface PreTestItem {
  topic_id: string;
  concept: string;
}

export interface CreateSessionReply {
  session_id: string;
  phase: string;
  items: PreTestItem[];
}

export interface VksAnswer {
  topic_id: string;
  concept: string;
  level: number;
  definition?: string | null;
}

export interface PostTestAnswer {
  concept: string;
  level: number;
  definition?: string | null;
}

export interface TopicInfo {
  topic_id: string;
  title: string;
}

export interface ScaffoldEntry {
  sub_id: string;
  title: string;
  level: number;
  fill_fraction: number;
}

export interface ScaffoldView {
  visible: boolean;
  entries: ScaffoldEntry[];
}

export interface PretestReply {
  rejected: boolean;
  phase: string;
  reason?: string;
  topic?: TopicInfo;
  scaffold?: ScaffoldView;
  may_finish?: boolean;
  remaining_seconds?: number;
}

export interface SerpResult {
  doc_id: string;
  title: string;
  snippet: string;
  host: string;
  rank: number;
}

export interface Serp {
  query: string;
  page: number;
  results: SerpResult[];
}

export interface QueryReply {
  serp: Serp;
  scaffold: ScaffoldView;
  may_finish: boolean;
  remaining_seconds: number;
}

export interface ScaffoldReply {
  phase: string;
  scaffold: ScaffoldView;
  may_finish: boolean;
  remaining_seconds: number;
}

export interface BatchAck {
  accepted: number;
  duplicates: number;
  last_client_seq: number;
}

export interface DocumentReply {
  doc_id: string;
  text: string;
}

export interface PosttestReply {
  phase: string;
  reason?: string;
}
