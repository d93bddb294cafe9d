pub mod wigner_oracle;
