//! Doctest bindings for the book chapters; filled in with the book.
