"""Welge tangent construction for a Corey waterflood.

Run as a script to print the shock saturation and front position:

    python tests/welge.py --nw 2 --no 2 --mu-ratio 1 --pvi 0.3 --length 1000
"""
import argparse

from scipy.optimize import brentq


def frac_flow(s, nw=2.0, no=2.0, mu_ratio=1.0, swc=0.0, sor=0.0):
    """Water fractional flow; mu_ratio is mu_w/mu_o."""
    se = min(max((s - swc) / (1.0 - swc - sor), 0.0), 1.0)
    lw = se**nw
    lo = (1.0 - se) ** no * mu_ratio
    return lw / (lw + lo)


def dfrac_flow(s, h=1e-7, **kw):
    return (frac_flow(s + h, **kw) - frac_flow(s - h, **kw)) / (2 * h)


def welge_front(pvi, length, swc=0.0, sor=0.0, **kw):
    """Return (shock saturation, shock speed df/ds, front position) after ``pvi`` pore volumes."""
    lo, hi = swc + 1e-6, 1.0 - sor - 1e-6
    # the tangent from (swc, 0) touches f at s_f: f'(s_f)*(s_f - swc) = f(s_f)
    g = lambda s: dfrac_flow(s, swc=swc, sor=sor, **kw) * (s - swc) - frac_flow(s, swc=swc, sor=sor, **kw)
    # g is negative just above swc and positive near 1 - sor for Corey exponents > 1
    s_f = brentq(g, lo + 1e-3, hi)
    speed = dfrac_flow(s_f, swc=swc, sor=sor, **kw)
    return s_f, speed, speed * pvi * length


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nw", type=float, default=2.0)
    ap.add_argument("--no", type=float, default=2.0)
    ap.add_argument("--mu-ratio", type=float, default=1.0)
    ap.add_argument("--swc", type=float, default=0.0)
    ap.add_argument("--sor", type=float, default=0.0)
    ap.add_argument("--pvi", type=float, default=0.3)
    ap.add_argument("--length", type=float, default=1000.0)
    a = ap.parse_args()
    s_f, speed, x_f = welge_front(a.pvi, a.length, a.swc, a.sor, nw=a.nw, no=a.no, mu_ratio=a.mu_ratio)
    print(f"s_f = {s_f:.6f}  df/ds = {speed:.6f}  x_f = {x_f:.3f}")


if __name__ == "__main__":
    main()
