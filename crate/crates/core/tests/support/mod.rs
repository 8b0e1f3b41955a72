pub mod qsqrt2;
