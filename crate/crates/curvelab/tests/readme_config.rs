use curvelab::config::ExperimentConfig;

#[test]
fn readme_defaults_block_is_the_default_config() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```toml\n").expect("toml block") + "```toml\n".len();
    let block = &readme[start..start + readme[start..].find("```").unwrap()];
    assert_eq!(ExperimentConfig::from_toml(block).unwrap(), ExperimentConfig::default());
}
