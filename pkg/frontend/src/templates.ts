// Template manifest validation: the file tree, hook resolvability, and doc
// requirements each shipped family must satisfy, plus the lexical
// archetype-agnosticism check for the meta template.

import { existsSync, readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

export interface ExtensionPoint {
  hook: string;
  file: string;
}

export interface TemplateManifest {
  family_id: string;
  archetypes: string[];
  files: string[];
  extension_points: ExtensionPoint[];
  docs: string[];
}

export interface Finding {
  kind: "missing_file" | "hook_unresolvable" | "hook_duplicated" | "missing_doc";
  detail: string;
}

const API_SUMMARY_DOC = "docs/template_api.md";
const IMPLEMENTATION_GUIDE_DOC = "docs/implementation_guide.md";

// Matches a method definition line, not call sites like `this.hook()`.
const hookDefinition = (hook: string) =>
  new RegExp(`^\\s*(?:async\\s+)?${hook.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")}\\s*\\(`, "m");

export function loadManifest(familyDir: string): TemplateManifest {
  return JSON.parse(readFileSync(join(familyDir, "manifest.json"), "utf8"));
}

export function listFamilies(templatesRoot: string): string[] {
  return readdirSync(templatesRoot, { withFileTypes: true })
    .filter((entry) => entry.isDirectory())
    .map((entry) => entry.name)
    .filter((name) => existsSync(join(templatesRoot, name, "manifest.json")))
    .sort();
}

export function validateManifest(familyDir: string, manifest?: TemplateManifest): Finding[] {
  const m = manifest ?? loadManifest(familyDir);
  const findings: Finding[] = [];

  for (const file of m.files) {
    if (!existsSync(join(familyDir, file))) {
      findings.push({ kind: "missing_file", detail: `${m.family_id}: ${file} listed but absent` });
    }
  }

  for (const point of m.extension_points) {
    const hostPath = join(familyDir, point.file);
    if (!existsSync(hostPath)) {
      findings.push({
        kind: "hook_unresolvable",
        detail: `${m.family_id}: host file ${point.file} for ${point.hook} missing`,
      });
      continue;
    }
    const host = readFileSync(hostPath, "utf8");
    const matches = host.match(new RegExp(hookDefinition(point.hook), "gm")) ?? [];
    if (matches.length === 0) {
      findings.push({
        kind: "hook_unresolvable",
        detail: `${m.family_id}: ${point.hook} not defined in ${point.file}`,
      });
    } else if (matches.length > 1) {
      findings.push({
        kind: "hook_duplicated",
        detail: `${m.family_id}: ${point.hook} defined ${matches.length} times in ${point.file}`,
      });
    }
    // the hook must live in exactly this one file
    for (const file of m.files) {
      if (file === point.file || !file.endsWith(".js")) continue;
      if (!existsSync(join(familyDir, file))) continue; // already a missing_file finding
      const other = readFileSync(join(familyDir, file), "utf8");
      if (hookDefinition(point.hook).test(other)) {
        findings.push({
          kind: "hook_duplicated",
          detail: `${m.family_id}: ${point.hook} also defined in ${file}`,
        });
      }
    }
  }

  for (const doc of [API_SUMMARY_DOC, IMPLEMENTATION_GUIDE_DOC]) {
    if (!m.docs.includes(doc) || !existsSync(join(familyDir, doc))) {
      findings.push({ kind: "missing_doc", detail: `${m.family_id}: ${doc} required` });
    }
  }

  return findings;
}

// The meta template must carry no archetype-specific physics configuration.
// The check is scoped to the places physics configuration lives (config and
// scene code); engine/loader plumbing legitimately says e.g. `entry.path`.
const PHYSICS_TOKENS = ["gravity", "grid", "path", "wave", "tower", "jump"];

export function metaPhysicsTokenFindings(metaDir: string): string[] {
  const findings: string[] = [];
  const targets = [join(metaDir, "gameConfig.json")];
  const scenesDir = join(metaDir, "src", "scenes");
  for (const entry of readdirSync(scenesDir)) {
    targets.push(join(scenesDir, entry));
  }
  for (const target of targets) {
    const text = readFileSync(target, "utf8").toLowerCase();
    for (const token of PHYSICS_TOKENS) {
      if (new RegExp(`\\b${token}`, "i").test(text)) {
        findings.push(`${target}: contains physics token "${token}"`);
      }
    }
  }
  return findings;
}

// Every gameConfig entry must use the { "value": X } envelope.
export function configEnvelopeViolations(familyDir: string): string[] {
  const raw = JSON.parse(readFileSync(join(familyDir, "gameConfig.json"), "utf8"));
  const violations: string[] = [];
  for (const [key, wrapped] of Object.entries(raw)) {
    const keys = wrapped !== null && typeof wrapped === "object" ? Object.keys(wrapped) : [];
    if (keys.length !== 1 || keys[0] !== "value") {
      violations.push(`${key} is not wrapped as { "value": X }`);
    }
  }
  return violations;
}
