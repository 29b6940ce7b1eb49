macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
    };
}

example!(metrics);
example!(corpus_pipeline);
example!(uncertainty_scores);
example!(idds_selection);
example!(mmr_baseline);
example!(self_learning);
example!(replay_bundles);
example!(simulate_protocol);

#[test]
fn examples_run() {
    metrics::run_example().expect("metrics");
    corpus_pipeline::run_example().expect("corpus_pipeline");
    uncertainty_scores::run_example().expect("uncertainty_scores");
    idds_selection::run_example().expect("idds_selection");
    mmr_baseline::run_example().expect("mmr_baseline");
    self_learning::run_example().expect("self_learning");
    replay_bundles::run_example().expect("replay_bundles");
    simulate_protocol::run_example().expect("simulate_protocol");
}
