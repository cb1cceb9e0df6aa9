"""Block Schur products, polar factorizations and thin-set witnesses."""
