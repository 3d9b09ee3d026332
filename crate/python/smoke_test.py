"""Quick end-to-end check of the Python bindings."""

import math

import npduet_py as nd


def main():
    g = nd.DiskPair(1.0, 1.0, 0.01)
    assert g.beta > 0 and 0 < g.rho < 1
    print(g, "beta", g.beta, "rho", g.rho)

    modes = nd.spectrum(g, 4)
    assert len(modes) == 8
    assert all(abs(lam) < 0.5 for _, _, lam, _ in modes)

    eig = nd.nystrom_spectrum(nd.DiskPair(1.2, 0.8, 0.3), nodes=128, count=6)
    assert all(abs(im) < 1e-10 for _, im, _ in eig)
    assert nd.symmetrization_residual(nd.DiskPair(1.2, 0.8, 0.3), nodes=128) < 1e-12

    sol = nd.solve(g, "inf", "inf", "x")
    c1, c2 = g.centers
    mid = 0.5 * (c1 + 1.0 + c2 - 1.0)
    zone, u, ux, uy, *_ = sol.evaluate(mid, 0.0)
    assert zone == "annulus" and math.isfinite(ux)
    print("|grad u| at gap midpoint", math.hypot(ux, uy))

    recs = nd.sweep(1.0, 1.0, "inf", "inf", "x", [1e-2, 1e-3, 1e-4])
    slope, r2 = nd.fit_loglog([(r.eps, r.grad_max) for r in recs])
    assert abs(slope + 0.5) < 0.05, slope
    print("grad slope", slope, "r2", r2)

    code, out, _ = nd.run_cli(["spectrum", "--r1", "1", "--r2", "1", "--eps", "0.1"])
    assert code == 0 and out.startswith("n,")
    code, _, err = nd.run_cli(["solve", "--k1", "-1"])
    assert code == 1, err

    try:
        nd.DiskPair(1.0, 1.0, -0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("negative separation accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
