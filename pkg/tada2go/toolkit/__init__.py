"""Numerical library: imaging, JPEG codec, residuals, alignment metrics, emulator, embedding, steganalysis and baselines."""
