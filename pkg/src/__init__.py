# multiroot: solvable root dynamics of polynomials with one multiple root
