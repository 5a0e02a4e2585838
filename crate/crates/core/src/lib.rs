pub mod exact;
pub mod wpoly;
pub mod symmetry;
pub mod presets;
pub mod koszul;
pub mod hochschild;
pub mod unfolding;
pub mod trivext;
pub mod specseq;
