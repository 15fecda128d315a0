"""Salt-and-pepper denoising of the bundled 64x64 test crop.

Each pixel is re-estimated from its 5x5 neighbourhood by a robust local
quadratic fit; this takes a few minutes per solver.
"""

from pathlib import Path

from sdrvm.experiments.images import (denoise_image, median_filter_3x3, psnr,
                                      read_pgm, salt_pepper)

img = read_pgm(Path(__file__).resolve().parents[1] / "tests" / "data" / "camera64.pgm")
noisy = salt_pepper(img, 0.2, seed=0)
print(f"noisy        {psnr(img, noisy):6.2f} dB")
print(f"median 3x3   {psnr(img, median_filter_3x3(noisy)):6.2f} dB")
for method in ("rbrvm", "sdrvm-sd"):
    print(f"{method:12s} {psnr(img, denoise_image(noisy, method)):6.2f} dB", flush=True)
