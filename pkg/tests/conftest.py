from hypothesis import settings

settings.register_profile("repo", derandomize=True, print_blob=True)
settings.load_profile("repo")
