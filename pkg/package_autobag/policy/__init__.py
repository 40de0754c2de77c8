name = "package_autobag.policy"