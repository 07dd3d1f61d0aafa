/** Command line:
 *
 *    render --kind cdf|edge_vs_delay|median_vs_delay \
 *           --in summary.csv,cdf.csv --out fig.svg \
 *           [--labels Proposed=Optimal,...] [--log-x]
 */

import { FigureKind, FigureSpec, render } from "./render.js";

const KINDS: FigureKind[] = ["cdf", "edge_vs_delay", "median_vs_delay"];

export function parseArgs(argv: string[]): FigureSpec {
  if (argv[0] !== "render") {
    throw new Error(`unknown command "${argv[0] ?? ""}" (expected: render)`);
  }
  let kind: FigureKind | undefined;
  let inputs: string[] | undefined;
  let output: string | undefined;
  let labels: Record<string, string> | undefined;
  let logX = false;
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    const next = (): string => {
      i += 1;
      if (i >= argv.length) {
        throw new Error(`${arg} needs a value`);
      }
      return argv[i];
    };
    switch (arg) {
      case "--kind": {
        const v = next();
        if (!KINDS.includes(v as FigureKind)) {
          throw new Error(`--kind must be one of ${KINDS.join(", ")}, got "${v}"`);
        }
        kind = v as FigureKind;
        break;
      }
      case "--in":
        inputs = next().split(",").filter((s) => s.length > 0);
        break;
      case "--out":
        output = next();
        break;
      case "--labels":
        labels = {};
        for (const pair of next().split(",")) {
          const [from, to] = pair.split("=");
          if (!from || to === undefined) {
            throw new Error(`--labels entries must be old=new, got "${pair}"`);
          }
          labels[from] = to;
        }
        break;
      case "--log-x":
        logX = true;
        break;
      default:
        throw new Error(`unknown argument "${arg}"`);
    }
  }
  if (!kind || !inputs || inputs.length === 0 || !output) {
    throw new Error("render needs --kind, --in and --out");
  }
  return { kind, inputs, output, labels, logX };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const path = render(spec);
    console.log(path);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
