/**
 * Node bindings for the tabalg toolkit.
 *
 * Four calls mirror the CLI's semantics exactly: encodeInput, generateExample,
 * executeTokens, and scoreTokens.  Each call shells out to the tabalg CLI (the
 * toolkit's external interface), so outputs are byte-identical to batch runs
 * by construction; the test suite verifies that on the bundled corpus.
 *
 * Calls are stateless and synchronous; errors carry the CLI's stable
 * {code, message, nodeId?} envelope.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface EncodedInput {
  tokens: string;
  visibleRowCount: number;
}

export interface BoundExample {
  id: string;
  inputTokens: string;
  targetTokens: string;
}

export interface ScorePair {
  sda: number;
  fda: number;
}

export interface GenerateParams {
  question?: string;
  sql: string;
  tableTsv: string;
  level: string;
  scheme: string;
  budget?: number;
  inputSource?: "sql" | "question";
  id?: string;
}

export class TabalgError extends Error {
  readonly code: string;
  readonly nodeId?: number;

  constructor(code: string, message: string, nodeId?: number) {
    super(message);
    this.name = "TabalgError";
    this.code = code;
    this.nodeId = nodeId;
  }
}

const DEFAULT_BUDGET = 1024;

function cliCommand(): string[] {
  const override = process.env.TABALG_CLI;
  if (override) return override.split(" ");
  const python = process.env.TABALG_PYTHON ?? "python3";
  return [python, "-m", "tabalg.cli"];
}

function runCli(args: string[]): string {
  const [cmd, ...prefix] = cliCommand();
  const proc = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw new TabalgError("SpawnError", `cannot run tabalg CLI: ${proc.error.message}`);
  }
  const stdout = proc.stdout ?? "";
  if (proc.status !== 0) {
    const parsed = tryParseErrorEnvelope(stdout);
    if (parsed) throw parsed;
    throw new TabalgError(
      "CliError",
      `tabalg CLI exited with ${proc.status}: ${(proc.stderr ?? "").trim()}`,
    );
  }
  return stdout;
}

function tryParseErrorEnvelope(stdout: string): TabalgError | null {
  try {
    const doc = JSON.parse(stdout);
    if (doc && typeof doc === "object" && doc.error) {
      return new TabalgError(doc.error.code, doc.error.message, doc.error.node_id);
    }
  } catch {
    /* not a JSON envelope */
  }
  return null;
}

interface Workspace {
  dir: string;
  corpus: string;
}

function makeWorkspace(
  tableTsv: string,
  example: { id: string; question: string; sql: string | null; answer: string[] },
): Workspace {
  const dir = mkdtempSync(join(tmpdir(), "tabalg-"));
  writeFileSync(join(dir, "t.tsv"), tableTsv, "utf-8");
  const record = {
    id: example.id,
    question: example.question,
    table: "t.tsv",
    sql: example.sql,
    answer: example.answer,
  };
  const corpus = join(dir, "corpus.jsonl");
  writeFileSync(corpus, JSON.stringify(record) + "\n", "utf-8");
  return { dir, corpus };
}

function withWorkspace<T>(ws: Workspace, body: () => T): T {
  try {
    return body();
  } finally {
    rmSync(ws.dir, { recursive: true, force: true });
  }
}

/** Flatten a question and TSV table with [HEAD]/[ROW] delimiters under a
 * whitespace-token budget, reporting how many rows fit. */
export function encodeInput(
  question: string,
  tableTsv: string,
  budget: number = DEFAULT_BUDGET,
): EncodedInput {
  const ws = makeWorkspace(tableTsv, {
    id: "q",
    question,
    sql: "SELECT count(id) FROM w", // irrelevant to the encoder input
    answer: [],
  });
  return withWorkspace(ws, () => {
    const out = join(ws.dir, "out.jsonl");
    const manifest = join(ws.dir, "manifest.json");
    runCli([
      "generate",
      "--corpus", ws.corpus,
      "--level", "Full",
      "--scheme", "pre",
      "--input-source", "question",
      "--budget", String(budget),
      "--out", out,
      "--manifest", manifest,
    ]);
    const record = readRecord(out, manifest);
    const visible = JSON.parse(readFileSync(manifest, "utf-8")).visible_rows["q"];
    return { tokens: record.input_tokens, visibleRowCount: visible };
  });
}

interface RawRecord {
  id: string;
  input_tokens: string;
  target_tokens: string;
}

function readRecord(outPath: string, manifestPath: string): RawRecord {
  const lines = readFileSync(outPath, "utf-8").split("\n").filter(Boolean);
  if (lines.length === 0) {
    const manifest = JSON.parse(readFileSync(manifestPath, "utf-8"));
    const skip = manifest.skipped?.[0];
    throw new TabalgError(skip?.reason ?? "Skipped", `example not generated: ${skip?.reason}`);
  }
  return JSON.parse(lines[0]) as RawRecord;
}

/** Build one seq2seq record: byte-identical to what the CLI's batch
 * `generate` emits for the same inputs. */
export function generateExample(params: GenerateParams): BoundExample {
  const id = params.id ?? "example";
  const ws = makeWorkspace(params.tableTsv, {
    id,
    question: params.question ?? "",
    sql: params.sql,
    answer: [],
  });
  return withWorkspace(ws, () => {
    const out = join(ws.dir, "out.jsonl");
    const manifest = join(ws.dir, "manifest.json");
    runCli([
      "generate",
      "--corpus", ws.corpus,
      "--level", params.level,
      "--scheme", params.scheme,
      "--input-source", params.inputSource ?? "question",
      "--budget", String(params.budget ?? DEFAULT_BUDGET),
      "--out", out,
      "--manifest", manifest,
    ]);
    const record = readRecord(out, manifest);
    return { id: record.id, inputTokens: record.input_tokens, targetTokens: record.target_tokens };
  });
}

/** Parse a predicted sequence and execute it down to an answer list. */
export function executeTokens(tokens: string, scheme: string): string[] {
  const out = runCli(["delinearize", "--tokens", tokens, "--scheme", scheme, "--execute"]);
  return JSON.parse(out).answer as string[];
}

/** Execute a predicted sequence and compare it with a gold answer; broken
 * predictions score {0, 0} like the batch scorer. */
export function scoreTokens(
  predictedTokens: string,
  goldAnswer: string[],
  scheme: string,
): ScorePair {
  const ws = makeWorkspace("h\nv\n", {
    id: "q",
    question: "",
    sql: null,
    answer: goldAnswer,
  });
  return withWorkspace(ws, () => {
    const preds = join(ws.dir, "preds.jsonl");
    writeFileSync(
      preds,
      JSON.stringify({ id: "q", predicted_tokens: predictedTokens }) + "\n",
      "utf-8",
    );
    const report = JSON.parse(
      runCli([
        "score",
        "--corpus", ws.corpus,
        "--predictions", preds,
        "--level", "Full",
        "--scheme", scheme,
      ]),
    );
    const row = report.per_query[0];
    return { sda: row.sda, fda: row.fda };
  });
}
