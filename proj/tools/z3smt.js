#!/usr/bin/env node
// Reads an SMT-LIB2 script on stdin, evaluates it with the z3 wasm build,
// and prints the solver output on stdout.
"use strict";

function loadZ3() {
  const candidates = [
    "z3-solver",
    "/usr/lib/node_modules/z3-solver",
    "/usr/local/lib/node_modules/z3-solver",
  ];
  for (const name of candidates) {
    try {
      return require(name);
    } catch (err) {
      if (err.code !== "MODULE_NOT_FOUND") throw err;
    }
  }
  throw new Error("z3-solver module not found (npm install -g z3-solver)");
}

async function main() {
  const chunks = [];
  for await (const chunk of process.stdin) chunks.push(chunk);
  const script = Buffer.concat(chunks).toString("utf8");

  const { init } = loadZ3();
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  Z3.del_config(cfg);
  const output = await Z3.eval_smtlib2_string(ctx, script);
  process.stdout.write(output.endsWith("\n") ? output : output + "\n");
  process.exit(0);
}

main().catch((err) => {
  process.stderr.write(String(err && err.stack ? err.stack : err) + "\n");
  process.exit(1);
});
