use std::time::Duration;

/// Pipeline stages that the benchmark attributes wall time to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Init,
    DecodeForward,
    RenderForward,
    Losses,
    RenderBackward,
    DecodeBackward,
    Optimizer,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Init,
        Stage::DecodeForward,
        Stage::RenderForward,
        Stage::Losses,
        Stage::RenderBackward,
        Stage::DecodeBackward,
        Stage::Optimizer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::DecodeForward => "decode_forward",
            Stage::RenderForward => "render_forward",
            Stage::Losses => "losses",
            Stage::RenderBackward => "render_backward",
            Stage::DecodeBackward => "decode_backward",
            Stage::Optimizer => "optimizer",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Accumulated wall time and call count per stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTimes {
    seconds: [f64; 7],
    calls: [u64; 7],
}

impl StageTimes {
    pub fn add(&mut self, stage: Stage, d: Duration) {
        self.seconds[stage.slot()] += d.as_secs_f64();
        self.calls[stage.slot()] += 1;
    }

    pub fn seconds(&self, stage: Stage) -> f64 {
        self.seconds[stage.slot()]
    }

    pub fn calls(&self, stage: Stage) -> u64 {
        self.calls[stage.slot()]
    }

    pub fn total(&self) -> f64 {
        self.seconds.iter().sum()
    }

    pub fn merge(&mut self, other: &StageTimes) {
        for i in 0..7 {
            self.seconds[i] += other.seconds[i];
            self.calls[i] += other.calls[i];
        }
    }
}
