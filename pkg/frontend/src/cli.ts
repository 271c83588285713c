#!/usr/bin/env node
import { render } from "./report";

function usage(): never {
  console.error("usage: report --in <artifact dir> --out <report dir> [--format png|svg]");
  process.exit(2);
}

function main(argv: string[]): number {
  let inDir: string | undefined;
  let outDir: string | undefined;
  let format: "svg" | "png" = "svg";
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--in":
        inDir = argv[++i];
        break;
      case "--out":
        outDir = argv[++i];
        break;
      case "--format": {
        const value = argv[++i];
        if (value !== "svg" && value !== "png") usage();
        format = value;
        break;
      }
      default:
        usage();
    }
  }
  if (!inDir || !outDir) usage();
  try {
    const result = render(inDir, outDir, format);
    for (const f of result.written) console.log(`wrote ${f}`);
    for (const s of result.skipped) console.log(`skipped ${s}`);
    return 0;
  } catch (err) {
    console.error(`report failed: ${err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
