name = "package_autobag.sim"