"""
Reading the analyticity radius off a spectrum
=============================================

sech(x) has poles at x = +-i pi/2, so its Fourier coefficients decay like
exp(-pi |xi| / 2).  A Gaussian is entire and its spectrum falls off faster
than any exponential, which the fit reports as "entire beyond window".
"""
import numpy as np

from kdvk import Field, estimate_radius, make_grid

grid = make_grid(4096, 64 * np.pi)
x = grid.x - grid.period / 2

for name, values in [("sech", 1 / np.cosh(x)), ("sech(2x)", 1 / np.cosh(2 * x)), ("gaussian", np.exp(-x * x))]:
    fit = estimate_radius(Field.from_physical(grid, values), (2.0, 20.0))
    print(f"{name:9s} sigma_hat = {fit.sigma_hat:8.5f}  modes = {fit.n_modes:4d}  entire = {fit.entire_beyond_window}")

print("expected for sech: pi/2 =", np.pi / 2, " for sech(2x): pi/4 =", np.pi / 4)
