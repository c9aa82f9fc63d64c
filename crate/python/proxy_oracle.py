#!/usr/bin/env python3
"""Reference external accuracy oracle.

Speaks the line-delimited JSON protocol in docs/oracle-protocol.md and answers
with the same synthetic formula as the builtin `proxy` oracle, so a search run
with `--oracle "external:python3 python/proxy_oracle.py"` reproduces the
`--oracle proxy` trace. Replace `accuracy()` with a real evaluation to plug in
a quantized model.
"""

import json
import sys

PROTOCOL = 1
ACC_FP = 0.71
EPS_W = 1e-4
EPS_A = 1e-4


def accuracy(layers):
    drop = 0.0
    for layer in layers:
        w = 2.0 ** (8 - layer["w_bits"]) * EPS_W
        a = 2.0 ** (8 - layer["a_bits"]) * EPS_A
        drop += 1.0 * (w + a - EPS_W - EPS_A)
    return min(1.0, max(0.0, ACC_FP - drop))


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            if req.get("protocol") != PROTOCOL:
                raise ValueError(f"unsupported protocol {req.get('protocol')}")
            resp = {"protocol": PROTOCOL, "accuracy": accuracy(req["layers"])}
        except Exception as exc:  # report, keep serving
            resp = {"protocol": PROTOCOL, "error": str(exc)}
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
