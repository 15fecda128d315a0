"""Experiment harnesses: recovery sweeps, housing regression, image denoising."""
