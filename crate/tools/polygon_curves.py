#!/usr/bin/env python3
"""Derive the canonical minimal filling curve from one-face polygon gluings.

A minimal filling curve on the genus-g surface is a straight 4-valent graph
with 2g-1 vertices and a single complementary disc. We enumerate these maps
(Gauss word plus crossing signs), read off the dual presentation of the
surface group (one generator per edge, one relator per vertex), look for a
separating simple dual 2-cycle (a curve meeting the filling curve twice),
and bring the presentation to the standard one by Tietze and Whitehead moves.

Usage: polygon_curves.py GENUS [MAX_MAPS]

Prints the filling curve and the separating curve in a1 b1 ... notation.
Results must still be confirmed by the Rust oracle
(`cargo run --release --example find_canonical_curves -- 0 'G=word'`).
"""
import itertools
import sys
from collections import deque
from fractions import Fraction


# free group words: lists of nonzero ints, -x is the inverse of x

def inv(w):
    return [-x for x in reversed(w)]


def red(w):
    out = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return out


def cred(w):
    w = red(w)
    while len(w) > 1 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


def subst(w, m):
    out = []
    for x in w:
        out += m[x] if x > 0 else inv(m[-x])
    return red(out)


def cyc_canon(w):
    w = cred(w)
    return min((tuple(w[s:] + w[:s]) for s in range(len(w))), default=())


# one-face maps

def gauss_words(nv):
    out = []

    def rec(seq, cnt, nxt):
        if len(seq) == 2 * nv:
            out.append(tuple(seq))
            return
        for v in range(nxt):
            if cnt[v] < 2:
                cnt[v] += 1
                rec(seq + [v], cnt, nxt)
                cnt[v] -= 1
        if nxt < nv:
            cnt[nxt] += 1
            rec(seq + [nxt], cnt, nxt + 1)
            cnt[nxt] -= 1

    rec([], [0] * nv, 0)

    def canon(w):
        best = None
        for s in range(len(w)):
            r = w[s:] + w[:s]
            rl = {}
            t = tuple(rl.setdefault(x, len(rl)) for x in r)
            best = t if best is None or t < best else best
        return best

    return sorted({canon(w) for w in out})


def rotation_system(word, signs):
    # darts ('s', j) / ('e', j): start / end of edge j, edge j runs from visit j to j+1
    n = len(word)
    visits = {}
    for j, v in enumerate(word):
        visits.setdefault(v, []).append(j)
    rot = {}
    for v, (j, k) in visits.items():
        inj, outj = ('e', (j - 1) % n), ('s', j)
        ink, outk = ('e', (k - 1) % n), ('s', k)
        order = [inj, ink, outj, outk] if signs[v] > 0 else [inj, outk, outj, ink]
        for i in range(4):
            rot[order[i]] = order[(i + 1) % 4]
    return rot


def faces(rot):
    rinv = {b: a for a, b in rot.items()}
    opp = lambda d: ('e', d[1]) if d[0] == 's' else ('s', d[1])
    out, done = [], set()
    for d in rot:
        if d in done:
            continue
        f, x = [], d
        while x not in done:
            done.add(x)
            f.append(x)
            x = rinv[opp(x)]
        out.append(f)
    return out


def vertex_relator(rot, d0):
    rel, d = [], d0
    while True:
        kind, e = d
        rel.append(-(e + 1) if kind == 's' else e + 1)
        d = rot[d]
        if d == d0:
            return rel


def pushoff_word(n, rot):
    # the curve pushed to its left crosses the transverse strand once per visit
    w = []
    for j in range(n):
        kind, e = rot[('s', j)]
        w.append(e + 1 if kind == 's' else -(e + 1))
    return w


def rank(rows):
    rows = [[Fraction(x) for x in r] for r in rows]
    r = 0
    for c in range(len(rows[0]) if rows else 0):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def abel(w, n):
    v = [0] * n
    for x in w:
        v[abs(x) - 1] += 1 if x > 0 else -1
    return v


def configurations(genus):
    nv = 2 * genus - 1
    n = 2 * nv
    for word in gauss_words(nv):
        if any(word[j] == word[(j + 1) % n] for j in range(n)):
            continue
        for signs in itertools.product([1, -1], repeat=nv):
            rot = rotation_system(word, signs)
            fs = faces(rot)
            if len(fs) != 1:
                continue
            pos = {(d[1], 'L' if d[0] == 's' else 'R'): i for i, d in enumerate(fs[0])}
            rels = []
            for v in range(nv):
                d0 = next(d for d in rot if d[0] == 's' and word[d[1]] == v)
                rels.append(vertex_relator(rot, d0))
            ab = [abel(r, n) for r in rels]
            base = rank(ab)
            etas = []
            for e, f in itertools.combinations(range(n), 2):
                for de, df in itertools.product([1, -1], repeat=2):
                    side = lambda x, d, out: (x, 'L' if (d > 0) == out else 'R')
                    c1 = (pos[side(f, df, False)], pos[side(e, de, True)])
                    c2 = (pos[side(e, de, False)], pos[side(f, df, True)])
                    lo, hi = sorted(c1)
                    if (lo < c2[0] < hi) != (lo < c2[1] < hi):
                        continue  # the two chords cross
                    eta = [de * (e + 1), df * (f + 1)]
                    if rank(ab + [abel(eta, n)]) == base:
                        etas.append(eta)
            yield word, signs, rels, pushoff_word(n, rot), etas


# presentations

def tietze(ngens, rels, words):
    rels = [cred(r) for r in rels]
    words = [red(w) for w in words]
    alive = set(range(1, ngens + 1))
    while len(rels) > 1:
        _, ri, x = min((len(r), ri, x) for ri, r in enumerate(rels)
                        for x in {abs(t) for t in r} if sum(abs(t) == x for t in r) == 1)
        r = rels.pop(ri)
        i = next(i for i, t in enumerate(r) if abs(t) == x)
        r = r[i:] + r[:i]
        sol = inv(r[1:]) if r[0] > 0 else r[1:]
        m = {g: [g] for g in alive}
        m[x] = sol
        rels = [cred(subst(q, m)) for q in rels]
        words = [red(subst(w, m)) for w in words]
        alive.discard(x)
    m = {g: [i + 1] for i, g in enumerate(sorted(alive))}
    return len(alive), cred(subst(rels[0], m)), [red(subst(w, m)) for w in words]


def whitehead_autos(n):
    letters = [x for i in range(1, n + 1) for x in (i, -i)]
    for a in letters:
        others = [x for x in letters if abs(x) != abs(a)]
        for bits in range(1, 1 << len(others)):
            A = {a} | {others[j] for j in range(len(others)) if bits >> j & 1}
            m = {}
            for g in range(1, n + 1):
                w = [g]
                if g != abs(a):
                    if g in A:
                        w = w + [a]
                    if -g in A:
                        w = [-a] + w
                m[g] = w
            yield m


def compose(m1, m2, n):
    return {g: red(subst(m1[g], m2)) for g in range(1, n + 1)}


def total(ws):
    return sum(len(cred(w)) for w in ws)


def peak_reduce(n, words, autos):
    phi = {g: [g] for g in range(1, n + 1)}
    cur = total(words)
    while True:
        for m in autos:
            nw = [subst(w, m) for w in words]
            if total(nw) < cur:
                words, cur, phi = nw, total(nw), compose(phi, m, n)
                break
        else:
            return phi, [cred(w) for w in words]


def standard_relabel(n, R):
    g = n // 2
    for c in (R, inv(R)):
        for s in range(len(c)):
            r = c[s:] + c[:s]
            if len(r) != 4 * g:
                continue
            m = {}
            for k in range(g):
                x, y = r[4 * k], r[4 * k + 1]
                if r[4 * k + 2] != -x or r[4 * k + 3] != -y:
                    break
                m[abs(x)] = [(2 * k + 1) * (1 if x > 0 else -1)]
                m[abs(y)] = [(2 * k + 2) * (1 if y > 0 else -1)]
            else:
                if len(m) == n:
                    return m
    return None


def to_standard(n, words, autos):
    """Automorphism taking words[0] (the relator) to the standard product of
    commutators; the remaining words only ride along."""
    phi, ws = peak_reduce(n, words, autos)
    t0 = total(ws)
    seen = {tuple(cyc_canon(w) for w in ws)}
    q = deque([(ws, phi)])
    while q:
        ws, phi = q.popleft()
        rl = standard_relabel(n, ws[0])
        if rl is not None:
            return compose(phi, rl, n)
        for m in autos:
            nw = [cred(subst(w, m)) for w in ws]
            key = tuple(cyc_canon(w) for w in nw)
            if total(nw) == t0 and key not in seen:
                seen.add(key)
                q.append((nw, compose(phi, m, n)))
    return None


def show(w):
    return " ".join((f"a{(abs(x) + 1) // 2}" if abs(x) % 2 else f"b{abs(x) // 2}")
                    if x > 0 else (f"A{(abs(x) + 1) // 2}" if abs(x) % 2 else f"B{abs(x) // 2}") for x in w)


def main():
    genus = int(sys.argv[1])
    max_maps = int(sys.argv[2]) if len(sys.argv) > 2 else 1
    nv = 2 * genus - 1
    autos = list(whitehead_autos(2 * genus))
    nmaps = nsep = 0
    for word, signs, rels, gamma, etas in configurations(genus):
        nmaps += 1
        nsep += len(etas)
        if nmaps > max_maps:
            continue
        extra = [gamma] + etas[:1]
        n, R, ws = tietze(2 * nv, rels, extra)
        phi = to_standard(n, [R] + ws[1:], autos)
        print(f"map {word} signs {signs}")
        print(f"  gamma0 = {show(cred(subst(ws[0], phi)))}")
        if etas:
            print(f"  eta    = {show(cred(subst(ws[1], phi)))}")
        else:
            print("  no separating curve meets it twice")
    print(f"{nmaps} one-face maps, {nsep} separating dual 2-cycles")


if __name__ == "__main__":
    main()
