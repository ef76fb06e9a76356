#!/usr/bin/env python3
"""Smoke test for the plugboard_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/,
copies it next to a temp dir under an importable name, and exercises the
main types and operations. Build first with:

    cargo build -p plugboard-py
"""

import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_extension() -> Path:
    candidates = [
        REPO / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libplugboard_py.so", "libplugboard_py.dylib", "plugboard_py.dll")
    ]
    for c in candidates:
        if c.exists():
            return c
    sys.exit("extension not found; run `cargo build -p plugboard-py` first")


def main() -> None:
    ext = locate_extension()
    tmp = Path(tempfile.mkdtemp(prefix="plugboard_py_"))
    suffix = ".pyd" if ext.suffix == ".dll" else ".so"
    shutil.copy2(ext, tmp / f"plugboard_py{suffix}")
    sys.path.insert(0, str(tmp))
    import plugboard_py as pb

    checks = 0

    def check(label, got, want):
        nonlocal checks
        assert got == want, f"{label}: got {got!r}, want {want!r}"
        checks += 1
        print(f"ok {checks:2d} - {label}")

    succ = pb.succ()
    check("succ type", succ.interface_type(), "N -> N")
    check("succ(7)", pb.run_fast(succ, [7]), [8])

    twice = pb.compose(succ, succ)
    check("compose value", pb.run_fast(twice, [3]), [5])

    # h(x;y) = succ(x) + succ(y), built from copy + product + add
    orig, dup = pb.copy(succ)
    h = pb.compose(pb.product(orig, dup), pb.add())
    check("h type", h.interface_type(), "(N;N) -> N")
    check("h(3;4) fast", pb.run_fast(h, [3, 4]), [9])
    outputs, trace = pb.run_tokens(h, [3, 4])
    check("h(3;4) tokens", outputs, [9])
    check("h firing count", len(trace), 3)

    folded = pb.iterate(4, succ)
    check("iter type", folded.interface_type(), "N -> N")
    circuit = pb.elaborate(folded)
    check("iter(4, succ) boards", circuit.board_count(), 5)
    check("iter(4, succ) at 1", pb.run_fast(folded, [1]), [5])
    check("iter_unfold agrees", pb.run_fast(pb.iter_unfold(4, succ), [1]), [5])

    comp = pb.comp_gadget("N", "N", "N")
    applied = pb.apply(pb.apply(comp, succ), pb.constant(7))
    check("comp gadget", pb.run_fast(applied, [5]), [7])

    chain = pb.rec("N", pb.numeral(1), pb.add(), 4)
    check("recursor chain", pb.run_fast(chain, []), [7])

    ack = pb.ackermann()
    check("ack1(3;4)", pb.run_fast(ack, [3, 4]), [10])
    check("ack1(4;2)", pb.run_fast(ack, [4, 2]), [14])

    main_c = pb.load_program("(define main (compose (copy succ) add))")
    check("program eval", pb.run_fast(main_c, [3, 4]), [9])
    check(
        "program check",
        pb.check_program("(define main (iter (numeral 4) succ))"),
        "main : N -> N\n",
    )

    text = h.serialize()
    back = pb.deserialize(text)
    check("serialize round trip", back.serialize(), text)
    check("validate", back.validate(), [])
    assert "digraph construction" in h.to_dot()
    checks += 1
    print(f"ok {checks:2d} - dot export")

    times = pb.encode_spikes([2, 3], isi_ms=2.0, gap_ms=10.0)
    check("spike encode", times, [0.0, 2.0, 12.0, 14.0, 16.0])
    check("spike decode", pb.decode_spikes(times, isi_ms=2.0, gap_ms=10.0), [2, 3])

    try:
        pb.compose(succ, pb.add())
        sys.exit("type mismatch not raised")
    except ValueError as e:
        assert "type mismatch" in str(e)
        checks += 1
        print(f"ok {checks:2d} - type errors raise ValueError")

    print(f"\nsmoke test passed: {checks} checks")


if __name__ == "__main__":
    main()
