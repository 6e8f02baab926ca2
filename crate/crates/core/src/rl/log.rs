use std::io::Write;

use super::{Action, EpisodeStats, Observation, StepResult};

/// FNV-1a over the bit patterns of the observation vector, as 16 hex digits.
pub fn observation_digest(obs: &Observation) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in obs.to_vec() {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Per-step and per-episode CSV writers.
pub struct EpisodeLog {
    steps: csv::Writer<Box<dyn Write>>,
    episodes: csv::Writer<Box<dyn Write>>,
}

impl EpisodeLog {
    pub fn new(steps: Box<dyn Write>, episodes: Box<dyn Write>) -> csv::Result<Self> {
        let mut steps = csv::Writer::from_writer(steps);
        steps.write_record([
            "episode",
            "step",
            "obs_digest",
            "thrust",
            "angle",
            "r_distance",
            "r_direction",
            "r_heading",
            "r_end",
            "reward",
            "outcome",
        ])?;
        let mut episodes = csv::Writer::from_writer(episodes);
        episodes.write_record(["episode_index", "steps", "outcome", "cumulative_reward", "success_rate_running"])?;
        Ok(Self { steps, episodes })
    }

    pub fn record_step(&mut self, episode: usize, action: &Action, r: &StepResult) -> csv::Result<()> {
        let t = &r.info.terms;
        self.steps.write_record([
            episode.to_string(),
            r.info.step.to_string(),
            observation_digest(&r.observation),
            action.thrust.to_string(),
            action.angle.to_string(),
            t.distance.to_string(),
            t.direction.to_string(),
            t.heading.to_string(),
            t.end.to_string(),
            t.total.to_string(),
            r.info.outcome.map_or("", |o| o.as_str()).to_string(),
        ])
    }

    pub fn record_episode(&mut self, s: &EpisodeStats) -> csv::Result<()> {
        self.episodes.write_record([
            s.episode_index.to_string(),
            s.steps.to_string(),
            s.outcome.as_str().to_string(),
            s.cumulative_reward.to_string(),
            s.success_rate_running.to_string(),
        ])
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.steps.flush()?;
        self.episodes.flush()
    }
}
