"""Option pricing with MPDATA: Black-Scholes PDEs solved as transport problems."""
