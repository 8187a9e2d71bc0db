"""Non-trainable channel layers: AWGN and Rayleigh block fading."""
