//! Switch between rayon and plain iterators.
//!
//! Every parallel loop in the crate maps independent items to independent
//! outputs and reduces, if at all, over an ordered `Vec` afterwards, so the
//! sequential build and the parallel build produce bitwise identical results.

#[cfg(feature = "parallel")]
pub(crate) use rayon::prelude::*;

#[cfg(feature = "parallel")]
macro_rules! par_iter {
    ($e:expr) => {
        $e.par_iter()
    };
}

#[cfg(not(feature = "parallel"))]
macro_rules! par_iter {
    ($e:expr) => {
        $e.iter()
    };
}

#[cfg(feature = "parallel")]
macro_rules! par_chunks_mut {
    ($e:expr, $n:expr) => {
        $e.par_chunks_mut($n)
    };
}

#[cfg(not(feature = "parallel"))]
macro_rules! par_chunks_mut {
    ($e:expr, $n:expr) => {
        $e.chunks_mut($n)
    };
}

pub(crate) use {par_chunks_mut, par_iter};
