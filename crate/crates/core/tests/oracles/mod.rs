pub mod eer;
