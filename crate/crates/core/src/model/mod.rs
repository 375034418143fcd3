//! Hierarchical patch/character model.
