export type QueryKind = "real" | "triplet" | "quad";

export type Operand = {
  id: string;
  features: number[];
};

export type QueryDescriptor = {
  seq: number;
  kind: QueryKind;
  mode: "exact" | "tctc";
  operands: Operand[];
  answered: number;
  estimated: Record<string, number>;
  status: string;
};

export type NoQuery = {
  none: true;
  status: string;
};

export type SessionParams = {
  mode?: "exact" | "tctc";
  alpha?: number;
  n_reps?: number;
  seed?: number;
  alpha_l?: number;
  alpha_h?: number;
};

export type CreatedSession = {
  session_id: string;
  estimated: Record<string, number>;
};

export type Progress = {
  status: string;
  answered: number;
  estimated: Record<string, number>;
  phase?: string;
};

export type SessionResult = {
  status: string;
  answered: number;
  submetric?: unknown;
  ledger?: Record<string, unknown>;
  log?: unknown[];
  error?: string;
};

/** Too-close-to-call relative answer. */
export const TCTC = -1;

export function isPending(q: QueryDescriptor | NoQuery): q is QueryDescriptor {
  return !("none" in q);
}
