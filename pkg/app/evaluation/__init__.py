"""PSNR metrics, evaluation sweeps and CSV output."""
