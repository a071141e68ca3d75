//! Independent brute-force oracle.
