//! Shared fixtures for unit tests.

pub const THREE_CYCLE: &str = "\
states: q r s
guard q != 5
guard r != 30
guard s != 15
trans q +2 r
trans r +1 s
trans s +2 q
";
