"""Acoustic model: CU-embedding, CUC-VAE latents and the mel decoder."""
