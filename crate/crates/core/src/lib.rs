pub mod acceptance;
pub mod building;
pub mod classical;
pub mod dehncube;
pub mod exactlin;
pub mod grouphom;
pub mod homology;
pub mod simpset;
