//! Best-of-N orchestration. (under construction)
