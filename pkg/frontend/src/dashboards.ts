// Dashboard table models built from the report endpoints. Cell text comes
// straight from the server's JSON values (String() of the parsed value, no
// reformatting or rounding), so what the operator reads is what the API
// returned.

export interface TableModel {
  title: string;
  columns: string[];
  rows: Array<{ label: string; cells: string[] }>;
}

function cellText(value: unknown): string {
  if (value === null || value === undefined) return "-";
  return String(value);
}

/** 13 criteria x states matrix plus the non-compliant / total / percentage
 * footer, mirroring the violation summary layout. */
export function complianceTable(doc: any): TableModel {
  const states: string[] = doc.states;
  const columns = [...states, "Total"];
  const rows = (doc.criteria as string[]).map((criterion) => ({
    label: criterion,
    cells: columns.map((s) => cellText(doc.violations[criterion][s])),
  }));
  rows.push({
    label: "Non compliant",
    cells: columns.map((s) => cellText(doc.non_compliant[s])),
  });
  rows.push({
    label: "Brick kiln count",
    cells: columns.map((s) => cellText(doc.kiln_count[s])),
  });
  rows.push({
    label: "Percentage violations",
    cells: columns.map((s) => cellText(doc.percentage[s])),
  });
  return { title: "Distance-rule compliance", columns, rows };
}

/** State rows x (mass, pollutants), Total last. */
export function emissionsTable(doc: any): TableModel {
  const pollutants = ["PM2.5", "SO2", "CO", "CO2"];
  const columns = ["Mass (t/day)", ...pollutants];
  const rows = (doc.rows as any[]).map((row) => ({
    label: row.state,
    cells: [cellText(row.mass_tonnes_per_day), ...pollutants.map((p) => cellText(row[p]))],
  }));
  return { title: "Emissions (tonnes/day)", columns, rows };
}

/** State rows x radius columns, Total last. */
export function exposureTable(doc: any): TableModel {
  const radii: number[] = doc.radii_km;
  const keys = radii.map((r) => `within_${formatRadius(r)}_km`);
  const columns = radii.map((r) => `< ${formatRadius(r)} km`);
  const rows = (doc.rows as any[]).map((row) => ({
    label: row.state,
    cells: keys.map((k) => cellText(row[k])),
  }));
  return { title: "Population near kilns (persons)", columns, rows };
}

/** Matches python's "%g" used in the report keys. */
function formatRadius(r: number): string {
  return String(r);
}

export interface ScatterModel {
  title: string;
  points: Array<{ label: string; x: number; y: number }>;
  rLabel: string;
}

/** Survey-vs-ours scatter; the r label repeats the comparison output. */
export function surveyScatter(doc: any): ScatterModel {
  const points = (doc.compared as string[]).map((name) => ({
    label: name,
    x: doc.districts[name].survey as number,
    y: doc.districts[name].ours as number,
  }));
  const r = doc.pearson_r;
  return {
    title: "Survey comparison",
    points,
    rLabel: r === null || r === undefined ? "r = -" : `r = ${String(r)}`,
  };
}

export function tableToHtml(model: TableModel): string {
  const head = `<tr><th></th>${model.columns.map((c) => `<th>${c}</th>`).join("")}</tr>`;
  const body = model.rows
    .map(
      (row) =>
        `<tr><th>${row.label}</th>${row.cells.map((c) => `<td>${c}</td>`).join("")}</tr>`,
    )
    .join("");
  return `<table class="report"><caption>${model.title}</caption>${head}${body}</table>`;
}
