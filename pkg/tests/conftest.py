import hypothesis

hypothesis.settings.register_profile(
    "suite", hypothesis.settings(max_examples=60, deadline=None)
)
hypothesis.settings.load_profile("suite")
